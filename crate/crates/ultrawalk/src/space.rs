//! The ultrametric site space T^(p)_M: p^M sites at the bottom of a depth-M
//! regular p-ary ball hierarchy.
//!
//! Sites are labeled 0..p^M-1. Writing two distinct labels in base p, their
//! *separation level* k is the smallest digit position from which the labels
//! agree upward — equivalently, the level of the smallest ball containing
//! both. The induced tree distance p^-(M-k) is an ultrametric: every triangle
//! is isoceles with the two longest sides equal.
//!
//! Level classes partition the space as seen from site 0:
//! V_0 = {0} and V_k = {p^(k-1), ..., p^k - 1}, |V_k| = (p-1)p^(k-1).
//! Walk amplitudes started at 0 are constant on each V_k, which is what makes
//! O(M) class-compressed evaluation possible everywhere else in this crate.
//!
//! Matrix indexing here reads digits most-significant-first (Kronecker block
//! order); the p-adic labeling by ball centers reads them least-significant-
//! first. [`digit_reverse`] is the involutive bridge between the two
//! conventions, and satisfies
//! `padic_valuation(|rev(n) - rev(n2)|, p) = M - separation_level(n, n2)`.

use crate::error::{Error, Result};

/// Anti-OOM guard for operations that materialize a whole level class.
pub(crate) const ENUMERATION_CAP: u64 = 1 << 22;

/// Shape of the hierarchy: branching factor p >= 2 and depth M >= 1, with
/// p^M required to fit a u64 so every site has an exact index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    p: u32,
    levels: u32,
}

impl TreeParams {
    pub fn new(p: u32, levels: u32) -> Result<Self> {
        if p < 2 {
            return Err(Error::Validation(format!("p must be at least 2, got {p}")));
        }
        if levels < 1 {
            return Err(Error::Validation("M must be at least 1".into()));
        }
        if (p as u64).checked_pow(levels).is_none() {
            return Err(Error::Validation(format!(
                "p^M = {p}^{levels} overflows the 64-bit site index range"
            )));
        }
        Ok(TreeParams { p, levels })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Depth M of the hierarchy; level classes are k = 0..=M.
    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn site_count(&self) -> u64 {
        (self.p as u64).pow(self.levels)
    }

    /// The p-adic reading of the space needs prime p; everything in this crate
    /// is well defined for composite p too, so callers surface this as a
    /// warning rather than an error.
    pub fn p_is_prime(&self) -> bool {
        is_prime(self.p as u64)
    }

    fn check_site(&self, n: u64) -> Result<()> {
        if n >= self.site_count() {
            return Err(Error::Domain(format!(
                "site {n} out of range for p^M = {}",
                self.site_count()
            )));
        }
        Ok(())
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest k >= 0 such that n and n2 agree in all base-p digits from
/// position k upward; 0 iff the sites coincide.
pub fn separation_level(n: u64, n2: u64, tp: &TreeParams) -> Result<u32> {
    tp.check_site(n)?;
    tp.check_site(n2)?;
    let p = tp.p as u64;
    let (mut a, mut b) = (n, n2);
    let mut k = 0;
    while a != b {
        a /= p;
        b /= p;
        k += 1;
    }
    debug_assert!(k <= tp.levels);
    Ok(k)
}

/// Ultrametric tree distance: 0 for equal sites, p^-(M-k) otherwise.
pub fn tree_distance(n: u64, n2: u64, tp: &TreeParams) -> Result<f64> {
    let k = separation_level(n, n2, tp)?;
    if n == n2 {
        return Ok(0.0);
    }
    Ok((tp.p as f64).powi(-((tp.levels - k) as i32)))
}

/// Level class of a site as seen from the origin: the k with n in V_k.
/// Equals the number of base-p digits of n (and separation_level(0, n)).
pub fn level_class_of(n: u64, tp: &TreeParams) -> Result<u32> {
    tp.check_site(n)?;
    let p = tp.p as u64;
    let mut k = 0;
    let mut bound = 1u64; // p^k
    while n >= bound {
        k += 1;
        bound *= p;
    }
    Ok(k)
}

/// Number of sites in V_k: 1 for k = 0, (p-1)p^(k-1) otherwise.
pub fn class_size(k: u32, tp: &TreeParams) -> Result<u64> {
    if k > tp.levels {
        return Err(Error::Domain(format!(
            "class index {k} exceeds depth M = {}",
            tp.levels
        )));
    }
    if k == 0 {
        return Ok(1);
    }
    let p = tp.p as u64;
    Ok((p - 1) * p.pow(k - 1))
}

/// Smallest site in V_k, used as the class representative in output tables.
pub fn class_representative(k: u32, tp: &TreeParams) -> Result<u64> {
    if k > tp.levels {
        return Err(Error::Domain(format!(
            "class index {k} exceeds depth M = {}",
            tp.levels
        )));
    }
    Ok(if k == 0 { 0 } else { (tp.p as u64).pow(k - 1) })
}

/// All sites of V_k in increasing order. Materializes (p-1)p^(k-1) entries,
/// so deep classes of large spaces are refused rather than exhausting memory.
pub fn class_members(k: u32, tp: &TreeParams) -> Result<Vec<u64>> {
    let size = class_size(k, tp)?;
    if size > ENUMERATION_CAP {
        return Err(Error::Resource { needed: size, cap: ENUMERATION_CAP });
    }
    if k == 0 {
        return Ok(vec![0]);
    }
    let lo = (tp.p as u64).pow(k - 1);
    let hi = (tp.p as u64).pow(k);
    Ok((lo..hi).collect())
}

/// Reverse the M-digit base-p expansion of n. Involutive; converts between
/// Kronecker (most-significant-first) and ball-center (least-significant-
/// first) labeling.
pub fn digit_reverse(n: u64, tp: &TreeParams) -> Result<u64> {
    tp.check_site(n)?;
    let p = tp.p as u64;
    let mut rest = n;
    let mut out = 0u64;
    for _ in 0..tp.levels {
        out = out * p + rest % p;
        rest /= p;
    }
    Ok(out)
}

/// Largest v with p^v dividing n. Requires n >= 1 (the valuation of 0 is
/// infinite) and p >= 2.
pub fn padic_valuation(n: u64, p: u32) -> Result<u32> {
    if p < 2 {
        return Err(Error::Domain(format!("p must be at least 2, got {p}")));
    }
    if n == 0 {
        return Err(Error::Domain("the p-adic valuation of 0 is infinite".into()));
    }
    let p = p as u64;
    let mut v = 0;
    let mut rest = n;
    while rest.is_multiple_of(p) {
        rest /= p;
        v += 1;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(p: u32, m: u32) -> TreeParams {
        TreeParams::new(p, m).unwrap()
    }

    #[test]
    fn tree_params_validation() {
        assert!(TreeParams::new(1, 2).is_err());
        assert!(TreeParams::new(3, 0).is_err());
        // 2^64 overflows u64 site indices; 2^63 does not.
        assert!(TreeParams::new(2, 64).is_err());
        assert!(TreeParams::new(2, 63).is_ok());
        assert_eq!(tp(3, 2).site_count(), 9);
    }

    #[test]
    fn primality_flag() {
        assert!(tp(3, 2).p_is_prime());
        assert!(tp(2, 5).p_is_prime());
        assert!(!tp(4, 2).p_is_prime());
        assert!(!tp(9, 1).p_is_prime());
        assert!(tp(101, 1).p_is_prime());
    }

    #[test]
    fn separation_level_examples() {
        let t = tp(3, 2);
        assert_eq!(separation_level(0, 0, &t).unwrap(), 0);
        assert_eq!(separation_level(0, 1, &t).unwrap(), 1);
        assert_eq!(separation_level(0, 3, &t).unwrap(), 2);
        assert_eq!(separation_level(4, 5, &t).unwrap(), 1);
        assert_eq!(separation_level(3, 6, &t).unwrap(), 2);
        assert_eq!(separation_level(5, 4, &t).unwrap(), 1);
        assert!(separation_level(9, 0, &t).is_err());
    }

    #[test]
    fn tree_distance_examples() {
        let t = tp(3, 2);
        assert_eq!(tree_distance(7, 7, &t).unwrap(), 0.0);
        assert_eq!(tree_distance(0, 1, &t).unwrap(), 1.0 / 3.0);
        assert_eq!(tree_distance(0, 3, &t).unwrap(), 1.0);
    }

    #[test]
    fn ultrametric_inequality_exhaustive_small() {
        // d(a,c) <= max(d(a,b), d(b,c)) over every triple of T^(3)_3.
        let t = tp(3, 3);
        let n = t.site_count();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let ab = tree_distance(a, b, &t).unwrap();
                    let bc = tree_distance(b, c, &t).unwrap();
                    let ac = tree_distance(a, c, &t).unwrap();
                    assert!(ac <= ab.max(bc) + 1e-15, "triple ({a},{b},{c})");
                }
            }
        }
    }

    #[test]
    fn level_classes_partition_the_space() {
        for (p, m) in [(2u32, 5u32), (3, 3), (5, 2)] {
            let t = tp(p, m);
            let mut seen = vec![false; t.site_count() as usize];
            for k in 0..=m {
                let members = class_members(k, &t).unwrap();
                assert_eq!(members.len() as u64, class_size(k, &t).unwrap());
                assert_eq!(members[0], class_representative(k, &t).unwrap());
                for n in members {
                    assert_eq!(level_class_of(n, &t).unwrap(), k);
                    assert!(!seen[n as usize], "site {n} in two classes");
                    seen[n as usize] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn level_class_matches_separation_from_origin() {
        let t = tp(3, 4);
        for n in 0..t.site_count() {
            assert_eq!(
                level_class_of(n, &t).unwrap(),
                separation_level(0, n, &t).unwrap()
            );
        }
    }

    #[test]
    fn class_sizes_sum_to_site_count() {
        let t = tp(5, 6);
        let total: u64 = (0..=6).map(|k| class_size(k, &t).unwrap()).sum();
        assert_eq!(total, t.site_count());
    }

    #[test]
    fn digit_reverse_examples_and_involution() {
        let t = tp(3, 2);
        assert_eq!(digit_reverse(1, &t).unwrap(), 3);
        assert_eq!(digit_reverse(5, &t).unwrap(), 7);
        let t2 = tp(2, 4);
        for n in 0..t2.site_count() {
            let r = digit_reverse(n, &t2).unwrap();
            assert_eq!(digit_reverse(r, &t2).unwrap(), n);
        }
    }

    #[test]
    fn padic_valuation_examples() {
        assert_eq!(padic_valuation(9, 3).unwrap(), 2);
        assert_eq!(padic_valuation(7, 3).unwrap(), 0);
        assert_eq!(padic_valuation(48, 2).unwrap(), 4);
        assert!(padic_valuation(0, 3).is_err());
        assert!(padic_valuation(5, 1).is_err());
    }

    #[test]
    fn reversal_bridges_valuation_and_separation() {
        // valuation(|rev(n) - rev(n2)|) = M - separation_level(n, n2)
        let t = tp(3, 3);
        for n in 0..t.site_count() {
            for n2 in 0..t.site_count() {
                if n == n2 {
                    continue;
                }
                let rn = digit_reverse(n, &t).unwrap();
                let rn2 = digit_reverse(n2, &t).unwrap();
                let v = padic_valuation(rn.abs_diff(rn2), 3).unwrap();
                let k = separation_level(n, n2, &t).unwrap();
                assert_eq!(v, t.levels() - k, "pair ({n},{n2})");
            }
        }
    }

    #[test]
    fn reversal_maps_ball_center_pairs_to_matrix_levels() {
        // In ball-center labels for p = 3, M = 2, the pair (0,3) sits at
        // separation 1 and (0,1) at separation 2 — opposite to the matrix
        // labels. The digit reversal realizes exactly that swap.
        let t = tp(3, 2);
        let rev = |n| digit_reverse(n, &t).unwrap();
        assert_eq!(separation_level(rev(0), rev(3), &t).unwrap(), 1);
        assert_eq!(separation_level(rev(0), rev(6), &t).unwrap(), 1);
        assert_eq!(separation_level(rev(0), rev(1), &t).unwrap(), 2);
        assert_eq!(separation_level(rev(0), rev(4), &t).unwrap(), 2);
    }

    #[test]
    fn class_members_refuses_huge_enumerations() {
        let t = tp(2, 40);
        match class_members(40, &t) {
            Err(Error::Resource { needed, .. }) => assert_eq!(needed, 1 << 39),
            other => panic!("expected resource error, got {other:?}"),
        }
    }
}
