//! Reference codes and rate matrices used throughout the examples and tests.

use crate::code::LinearCode;
use crate::field::Field;

/// Binary `[5,3]` code that splits as a `[3,2]` parity code plus a `[2,1]` repetition code.
pub fn c1() -> LinearCode {
    LinearCode::new(
        Field::binary(),
        vec![
            vec![1, 0, 0, 1, 0],
            vec![0, 1, 0, 1, 0],
            vec![0, 0, 1, 0, 1],
        ],
    )
    .expect("valid generator")
}

/// Binary `[9,5]` code without a capacity-achieving rate matrix.
pub fn c2() -> LinearCode {
    LinearCode::new(
        Field::binary(),
        vec![
            vec![1, 0, 0, 0, 0, 0, 0, 0, 1],
            vec![0, 1, 0, 0, 0, 0, 0, 0, 1],
            vec![0, 0, 1, 0, 0, 0, 1, 1, 0],
            vec![0, 0, 0, 1, 0, 1, 0, 1, 1],
            vec![0, 0, 0, 0, 1, 1, 1, 1, 1],
        ],
    )
    .expect("valid generator")
}

pub const C3_COLUMNS: [u64; 7] = [1, 2, 4, 8, 8, 14, 5];
pub const C4_COLUMNS: [u64; 11] = [1, 2, 4, 8, 16, 32, 48, 40, 24, 56, 55];

/// Binary `[7,4]` code.
pub fn c3() -> LinearCode {
    LinearCode::from_decimal_columns(Field::binary(), 4, &C3_COLUMNS).expect("valid columns")
}

/// Binary `[11,6]` code.
pub fn c4() -> LinearCode {
    LinearCode::from_decimal_columns(Field::binary(), 6, &C4_COLUMNS).expect("valid columns")
}

/// Binary `[2,1]` repetition code.
pub fn repetition2() -> LinearCode {
    LinearCode::new(Field::binary(), vec![vec![1, 1]]).expect("valid generator")
}

/// Binary `[3,2]` single parity-check code.
pub fn parity3() -> LinearCode {
    LinearCode::new(Field::binary(), vec![vec![1, 0, 1], vec![0, 1, 1]]).expect("valid generator")
}

/// A `κ = 2, ν = 3` rate matrix for [`c1`].
pub fn c1_rate_rows() -> Vec<Vec<u8>> {
    vec![
        vec![0, 1, 1, 1, 1],
        vec![1, 0, 0, 1, 1],
        vec![1, 1, 1, 0, 0],
    ]
}

/// A `κ = 2, ν = 3` rate matrix for [`c2`].
pub fn c2_rate_rows() -> Vec<Vec<u8>> {
    vec![
        vec![0, 1, 0, 0, 0, 1, 1, 1, 1],
        vec![1, 0, 1, 1, 1, 1, 1, 1, 1],
        vec![1, 1, 1, 1, 1, 0, 0, 0, 0],
    ]
}

/// Two-subresponse schedule for [`c2`] with rate 5/14.
pub fn table2_schedule() -> crate::protocols::Schedule {
    crate::protocols::Schedule::from_json(include_str!("../fixtures/table2_schedule.json"))
        .expect("valid fixture")
}
