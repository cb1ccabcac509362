//! Reference edit distance used to cross-check [`super::levenshtein`].
//!
//! Deliberately shares nothing with the production routine: it recurses over
//! suffix positions and memoizes, straight from the textbook recurrence.

use std::collections::HashMap;

use crate::error::OracleLimitExceeded;

pub const ORACLE_MAX_LEN: usize = 64;

pub fn levenshtein_oracle(a: &str, b: &str) -> Result<usize, OracleLimitExceeded> {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    for len in [a.len(), b.len()] {
        if len > ORACLE_MAX_LEN {
            return Err(OracleLimitExceeded { len, limit: ORACLE_MAX_LEN });
        }
    }
    let mut memo = HashMap::new();
    Ok(distance(&a, &b, a.len(), b.len(), &mut memo))
}

fn distance(a: &[char], b: &[char], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if i == 0 {
        return j;
    }
    if j == 0 {
        return i;
    }
    if let Some(&d) = memo.get(&(i, j)) {
        return d;
    }
    let delete = distance(a, b, i - 1, j, memo) + 1;
    let insert = distance(a, b, i, j - 1, memo) + 1;
    let replace = distance(a, b, i - 1, j - 1, memo) + usize::from(a[i - 1] != b[j - 1]);
    let d = delete.min(insert).min(replace);
    memo.insert((i, j), d);
    d
}
