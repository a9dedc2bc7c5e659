//! Simulated coded storage: random files, encoding, and the per-node
//! response engine.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{CodeError, LinearCode};
use crate::field::{Field, FieldError, Sym};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DssError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("file count, stripe count and stripe width must be positive")]
    EmptyShape,
    #[error("stripes have {files} symbols but the code has dimension {code}")]
    DimensionMismatch { files: usize, code: usize },
    #[error("node {node} outside [1, {n}]")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("coefficient vector {index} has length {got}, node stores {expected} symbols")]
    CoefficientLength {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("coefficient {value} is not in GF({q})")]
    CoefficientRange { value: Sym, q: u32 },
    #[error("malformed store dump: {0}")]
    Dump(String),
}

/// `f` independent uniformly random `β × k` files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileSet {
    field: Field,
    beta: usize,
    k: usize,
    files: Vec<Matrix>,
}

impl FileSet {
    pub fn new(field: Field, files: Vec<Matrix>) -> Result<Self, DssError> {
        let first = files.first().ok_or(DssError::EmptyShape)?;
        let (beta, k) = (first.rows(), first.cols());
        if beta == 0 || k == 0 || files.iter().any(|m| (m.rows(), m.cols()) != (beta, k)) {
            return Err(DssError::EmptyShape);
        }
        Ok(FileSet {
            field,
            beta,
            k,
            files,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn count(&self) -> usize {
        self.files.len()
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// File `m`, 0-based.
    pub fn file(&self, m: usize) -> &Matrix {
        &self.files[m]
    }
}

pub fn generate_files(
    f: usize,
    beta: usize,
    k: usize,
    field: &Field,
    seed: u64,
) -> Result<FileSet, DssError> {
    if f == 0 || beta == 0 || k == 0 {
        return Err(DssError::EmptyShape);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let files = (0..f)
        .map(|_| {
            let mut m = Matrix::zeros(beta, k);
            for i in 0..beta {
                for h in 0..k {
                    m.set(i, h, field.sample(&mut rng));
                }
            }
            m
        })
        .collect();
    FileSet::new(field.clone(), files)
}

/// The `βf × n` array of codewords; node `l` holds column `l`.
///
/// Row `m·β + i` (0-based) holds the encoding of stripe `i` of file `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedStore {
    code: LinearCode,
    files: usize,
    beta: usize,
    array: Matrix,
}

pub fn encode_store(files: &FileSet, code: &LinearCode) -> Result<CodedStore, DssError> {
    if files.k() != code.k() {
        return Err(DssError::DimensionMismatch {
            files: files.k(),
            code: code.k(),
        });
    }
    if files.field() != code.field() {
        return Err(DssError::Field(FieldError::Mismatch(
            files.field().order(),
            code.field().order(),
        )));
    }
    let mut array = Matrix::zeros(files.count() * files.beta(), code.n());
    for m in 0..files.count() {
        for i in 0..files.beta() {
            let word = code.encode(files.file(m).row(i));
            array.row_mut(m * files.beta() + i).copy_from_slice(&word);
        }
    }
    Ok(CodedStore {
        code: code.clone(),
        files: files.count(),
        beta: files.beta(),
        array,
    })
}

impl CodedStore {
    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn field(&self) -> &Field {
        self.code.field()
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.code.n()
    }

    /// Symbols per node, `βf`.
    pub fn depth(&self) -> usize {
        self.files * self.beta
    }

    pub fn row_index(&self, file: usize, stripe: usize) -> usize {
        file * self.beta + stripe
    }

    pub fn array(&self) -> &Matrix {
        &self.array
    }

    /// What node `l` (0-based) stores, and nothing else.
    pub fn node(&self, l: usize) -> Result<StorageNode, DssError> {
        if l >= self.n() {
            return Err(DssError::NodeOutOfRange {
                node: l + 1,
                n: self.n(),
            });
        }
        Ok(StorageNode {
            node: l,
            field: self.field().clone(),
            symbols: self.array.column(l),
        })
    }

    /// Decodes file `m` from an information set of every stripe.
    pub fn decode_file(&self, m: usize) -> Matrix {
        let info = self
            .code
            .smallest_information_set_within(u64::MAX >> (64 - self.n()))
            .expect("full-rank code");
        let sub = self.code.generator().select_columns(info.indices());
        let inv = linalg::invert(self.field(), &sub).expect("information set");
        let mut out = Matrix::zeros(self.beta, self.code.k());
        for i in 0..self.beta {
            let row = self.array.row(self.row_index(m, i));
            let restricted: Vec<Sym> = info.indices().iter().map(|&l| row[l]).collect();
            out.row_mut(i)
                .copy_from_slice(&inv.left_mul(self.field(), &restricted));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows = self.array.to_rows();
        let encoded = if self.field().is_binary() {
            StoredRows::Hex(rows.iter().map(|r| pack_bits(r)).collect())
        } else {
            StoredRows::Symbols(rows)
        };
        serde_json::to_string_pretty(&StoreDump {
            code: self.code.clone(),
            files: self.files,
            beta: self.beta,
            rows: encoded,
        })
        .expect("serializable")
    }

    pub fn from_json(json: &str) -> Result<Self, DssError> {
        let dump: StoreDump =
            serde_json::from_str(json).map_err(|e| DssError::Dump(e.to_string()))?;
        let n = dump.code.n();
        let rows = match dump.rows {
            StoredRows::Hex(h) => h
                .iter()
                .map(|s| unpack_bits(s, n))
                .collect::<Result<Vec<_>, _>>()?,
            StoredRows::Symbols(s) => s,
        };
        if rows.len() != dump.files * dump.beta || rows.iter().any(|r| r.len() != n) {
            return Err(DssError::Dump(
                "array shape does not match files × beta × n".into(),
            ));
        }
        let q = dump.code.field().order();
        if let Some(&value) = rows.iter().flatten().find(|&&v| v >= q) {
            return Err(DssError::CoefficientRange { value, q });
        }
        Ok(CodedStore {
            code: dump.code,
            files: dump.files,
            beta: dump.beta,
            array: Matrix::from_rows(&rows),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct StoreDump {
    code: LinearCode,
    files: usize,
    beta: usize,
    rows: StoredRows,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StoredRows {
    /// GF(2) rows packed little-endian, eight coordinates per byte.
    Hex(Vec<String>),
    Symbols(Vec<Vec<Sym>>),
}

fn pack_bits(row: &[Sym]) -> String {
    let mut bytes = vec![0u8; row.len().div_ceil(8)];
    for (i, &b) in row.iter().enumerate() {
        bytes[i / 8] |= (b as u8 & 1) << (i % 8);
    }
    hex::encode(bytes)
}

fn unpack_bits(s: &str, n: usize) -> Result<Vec<Sym>, DssError> {
    let bytes = hex::decode(s).map_err(|e| DssError::Dump(e.to_string()))?;
    if bytes.len() != n.div_ceil(8) {
        return Err(DssError::Dump(format!(
            "hex row {s:?} does not hold {n} bits"
        )));
    }
    Ok((0..n)
        .map(|i| (bytes[i / 8] >> (i % 8) & 1) as Sym)
        .collect())
}

/// Linear combinations a node is asked to evaluate over its `βf` symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeQuery {
    /// 0-based node index.
    pub node: usize,
    pub combinations: Vec<Vec<Sym>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeResponse {
    pub node: usize,
    pub values: Vec<Sym>,
}

/// A single storage node: its own column and nothing more.
#[derive(Debug, Clone)]
pub struct StorageNode {
    node: usize,
    field: Field,
    symbols: Vec<Sym>,
}

impl StorageNode {
    pub fn index(&self) -> usize {
        self.node
    }

    pub fn respond(&self, query: &NodeQuery) -> Result<NodeResponse, DssError> {
        let values = query
            .combinations
            .iter()
            .enumerate()
            .map(|(index, coefs)| {
                if coefs.len() != self.symbols.len() {
                    return Err(DssError::CoefficientLength {
                        index,
                        got: coefs.len(),
                        expected: self.symbols.len(),
                    });
                }
                if let Some(&value) = coefs.iter().find(|&&c| c >= self.field.order()) {
                    return Err(DssError::CoefficientRange {
                        value,
                        q: self.field.order(),
                    });
                }
                Ok(self.field.dot(coefs, &self.symbols))
            })
            .collect::<Result<_, _>>()?;
        Ok(NodeResponse {
            node: self.node,
            values,
        })
    }
}

/// Routes a query to the node it names.
pub fn node_respond(store: &CodedStore, query: &NodeQuery) -> Result<NodeResponse, DssError> {
    store.node(query.node)?.respond(query)
}
