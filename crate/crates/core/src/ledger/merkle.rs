use crate::hash::{double_sha256, double_sha256_parts, Hash256};

use super::LedgerError;

/// Bitcoin-style Merkle root: leaves are `double_sha256(tx)`, each level
/// hashes adjacent pairs, and an odd trailing node is paired with itself.
pub fn merkle_root<T: AsRef<[u8]>>(transactions: &[T]) -> Result<Hash256, LedgerError> {
    if transactions.is_empty() {
        return Err(LedgerError::EmptyTransactionSet);
    }
    let mut level: Vec<Hash256> = transactions.iter().map(|tx| double_sha256(tx.as_ref())).collect();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| {
                let right = pair.get(1).unwrap_or(&pair[0]);
                double_sha256_parts(&[pair[0].as_bytes(), right.as_bytes()])
            })
            .collect();
    }
    Ok(level[0])
}

/// Number of double-SHA-256 evaluations `merkle_root` performs for `n`
/// transactions.
pub fn merkle_hash_count(n: usize) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut total = n as u64;
    let mut width = n;
    while width > 1 {
        width = width.div_ceil(2);
        total += width as u64;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_an_error() {
        let none: [&[u8]; 0] = [];
        assert_eq!(merkle_root(&none), Err(LedgerError::EmptyTransactionSet));
    }

    #[test]
    fn single_leaf_is_root() {
        assert_eq!(merkle_root(&[b"tx0"]).unwrap(), double_sha256(b"tx0"));
    }

    #[test]
    fn two_leaves_hand_rolled() {
        let l0 = double_sha256(b"tx0");
        let l1 = double_sha256(b"tx1");
        let mut cat = Vec::new();
        cat.extend_from_slice(l0.as_bytes());
        cat.extend_from_slice(l1.as_bytes());
        assert_eq!(merkle_root(&[b"tx0", b"tx1"]).unwrap(), double_sha256(&cat));
    }

    #[test]
    fn odd_node_is_duplicated() {
        let three = merkle_root(&[b"a", b"b", b"c"]).unwrap();
        let four = merkle_root(&[b"a", b"b", b"c", b"c"]).unwrap();
        assert_eq!(three, four);
        let l: Vec<Hash256> = [b"a", b"b", b"c"].iter().map(|t| double_sha256(*t)).collect();
        let ab = double_sha256_parts(&[l[0].as_bytes(), l[1].as_bytes()]);
        let cc = double_sha256_parts(&[l[2].as_bytes(), l[2].as_bytes()]);
        assert_eq!(three, double_sha256_parts(&[ab.as_bytes(), cc.as_bytes()]));
    }

    #[test]
    fn hash_counts() {
        assert_eq!(merkle_hash_count(1), 1);
        assert_eq!(merkle_hash_count(2), 3);
        assert_eq!(merkle_hash_count(3), 3 + 2 + 1);
        assert_eq!(merkle_hash_count(4), 4 + 2 + 1);
        assert_eq!(merkle_hash_count(5), 5 + 3 + 2 + 1);
    }
}
