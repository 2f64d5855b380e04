use std::fmt::Write as _;

use serde::Serialize;

use super::CorrelationMatrix;

/// One line of the correlator table, modes numbered from 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelatorRow {
    pub i: usize,
    pub j: usize,
    pub estimate: f64,
    pub exact: Option<f64>,
    pub abs_error: Option<f64>,
}

/// `i,j,estimate,exact,abs_error`; the last two columns stay empty without
/// a reference.
pub fn correlators_csv(estimate: &CorrelationMatrix, exact: Option<&CorrelationMatrix>) -> String {
    let mut out = String::from("i,j,estimate,exact,abs_error\n");
    for i in 0..estimate.m {
        for j in 0..estimate.m {
            let e = estimate.get(i, j);
            match exact {
                Some(x) => {
                    let t = x.get(i, j);
                    writeln!(out, "{},{},{},{},{}", i + 1, j + 1, e, t, (e - t).abs()).unwrap();
                }
                None => writeln!(out, "{},{},{},,", i + 1, j + 1, e).unwrap(),
            }
        }
    }
    out
}
