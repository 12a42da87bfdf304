//! The resonance sets on the integer mode lattice and the combinatorial
//! identities the coupled system rests on.
//!
//! A triple (j1, j2, j3) resonates with target j when both the index sum
//! j1 - j2 + j3 = j and the square sum j1^2 - j2^2 + j3^2 = j^2 hold. On
//! the one-dimensional lattice these constraints collapse: every solution
//! has {j1, j3} = {j, j2}.

use crate::error::{CoreError, Result};

/// Largest admissible mode magnitude; squares stay far inside i64.
pub const MAX_MODE_INDEX: i64 = 1 << 15;

/// Largest band for which brute-force resonance sums are allowed.
pub const MAX_BRUTE_FORCE_BAND: u32 = 16;

/// Symmetric truncation of the mode lattice: modes with |j| <= J are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeBand {
    j_max: u32,
}

impl ModeBand {
    pub fn new(j_max: u32) -> Result<Self> {
        if (j_max as i64) > MAX_MODE_INDEX {
            return Err(CoreError::ModeIndexOverflow {
                j: j_max as i64,
                max: MAX_MODE_INDEX,
            });
        }
        Ok(ModeBand { j_max })
    }

    #[inline]
    pub fn j_max(&self) -> i64 {
        self.j_max as i64
    }

    /// Number of retained modes, 2J + 1.
    #[inline]
    pub fn mode_count(&self) -> usize {
        2 * self.j_max as usize + 1
    }

    #[inline]
    pub fn contains(&self, j: i64) -> bool {
        j.abs() <= self.j_max()
    }

    /// Iterates the retained mode indices in increasing order.
    pub fn modes(&self) -> impl Iterator<Item = i64> {
        -self.j_max()..=self.j_max()
    }

    /// Position of mode j in the stored order, if in band.
    #[inline]
    pub fn offset(&self, j: i64) -> Option<usize> {
        self.contains(j).then(|| (j + self.j_max()) as usize)
    }
}

/// One resonant triple for some target mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ResonanceTriple {
    pub j1: i64,
    pub j2: i64,
    pub j3: i64,
}

impl ResonanceTriple {
    /// Both constraints, in exact integer arithmetic.
    pub fn resonates_with(&self, j: i64) -> bool {
        self.j1 - self.j2 + self.j3 == j
            && self.j1 * self.j1 - self.j2 * self.j2 + self.j3 * self.j3 == j * j
    }
}

fn check_mode(j: i64) -> Result<()> {
    if j.abs() > MAX_MODE_INDEX {
        return Err(CoreError::ModeIndexOverflow {
            j,
            max: MAX_MODE_INDEX,
        });
    }
    Ok(())
}

/// Exhaustively enumerates the in-band resonant triples for target `j`, in
/// lexicographic order. Quadratic in the band size; this is the oracle the
/// closed form is checked against.
pub fn enumerate_resonances(j: i64, band: &ModeBand) -> Result<Vec<ResonanceTriple>> {
    check_mode(j)?;
    let jm = band.j_max();
    let mut out = Vec::new();
    for j1 in -jm..=jm {
        for j2 in -jm..=jm {
            let j3 = j - j1 + j2;
            if j3.abs() > jm {
                continue;
            }
            if j1 * j1 - j2 * j2 + j3 * j3 == j * j {
                out.push(ResonanceTriple { j1, j2, j3 });
            }
        }
    }
    Ok(out)
}

/// The collapsed description of the resonance set: {(j, k, k)} and
/// {(k, k, j)} over in-band k, with (j, j, j) listed once. Returned in the
/// same lexicographic order as `enumerate_resonances`. Targets outside the
/// band have no in-band triples and yield an empty list.
pub fn closed_form_resonances(j: i64, band: &ModeBand) -> Result<Vec<ResonanceTriple>> {
    check_mode(j)?;
    if !band.contains(j) {
        return Ok(Vec::new());
    }
    let jm = band.j_max();
    let mut out = Vec::with_capacity(2 * band.mode_count());
    for k in -jm..=jm {
        out.push(ResonanceTriple { j1: j, j2: k, j3: k });
        out.push(ResonanceTriple { j1: k, j2: k, j3: j });
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[inline]
fn japanese_bracket_sq(k: i64) -> f64 {
    1.0 + (k * k) as f64
}

/// Partial sum over |k| <= J of <k>^-4, accumulated from the smallest terms
/// upward with Kahan compensation.
fn bracket_quartic_partial_sum(j_max: i64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut add = |term: f64| {
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };
    for k in (1..=j_max).rev() {
        let b = japanese_bracket_sq(k);
        add(2.0 / (b * b));
    }
    add(1.0);
    sum
}

/// The weighted kernel sum `<j>^2 sum_{R(j), in band} <j1>^-2 <j2>^-2 <j3>^-2`.
///
/// Evaluated through the collapsed resonance set, which reduces it to
/// `2 sum_{|k|<=J} <k>^-4 - <j>^-4` for in-band targets. The exhaustive
/// enumeration route and an independent direct series both pin this down in
/// the tests.
pub fn kernel_sum(j: i64, band: &ModeBand) -> Result<f64> {
    check_mode(j)?;
    if !band.contains(j) {
        return Ok(0.0);
    }
    let bj = japanese_bracket_sq(j);
    Ok(2.0 * bracket_quartic_partial_sum(band.j_max()) - 1.0 / (bj * bj))
}

/// Direct series oracle: partial sum of `2 sum_{k in Z} <k>^-4 - 1` for the
/// j = 0 kernel, summed to the given number of terms per side.
pub fn kernel_series_oracle_j0(terms: i64) -> f64 {
    2.0 * bracket_quartic_partial_sum(terms) - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(j: u32) -> ModeBand {
        ModeBand::new(j).unwrap()
    }

    #[test]
    fn single_mode_band_has_single_triple() {
        let triples = enumerate_resonances(0, &band(0)).unwrap();
        assert_eq!(triples, vec![ResonanceTriple { j1: 0, j2: 0, j3: 0 }]);
        assert_eq!(closed_form_resonances(0, &band(0)).unwrap(), triples);
    }

    #[test]
    fn j0_band1_matches_hand_enumeration() {
        let expect = vec![
            ResonanceTriple { j1: -1, j2: -1, j3: 0 },
            ResonanceTriple { j1: 0, j2: -1, j3: -1 },
            ResonanceTriple { j1: 0, j2: 0, j3: 0 },
            ResonanceTriple { j1: 0, j2: 1, j3: 1 },
            ResonanceTriple { j1: 1, j2: 1, j3: 0 },
        ];
        assert_eq!(enumerate_resonances(0, &band(1)).unwrap(), expect);
        assert_eq!(closed_form_resonances(0, &band(1)).unwrap(), expect);
    }

    #[test]
    fn out_of_band_target_has_no_triples() {
        assert!(enumerate_resonances(2, &band(1)).unwrap().is_empty());
        assert!(closed_form_resonances(2, &band(1)).unwrap().is_empty());
        assert_eq!(kernel_sum(2, &band(1)).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_count_merges_diagonal() {
        let triples = closed_form_resonances(3, &band(3)).unwrap();
        assert_eq!(triples.len(), 13);
        assert!(triples.iter().all(|t| t.resonates_with(3)));
    }

    #[test]
    fn enumeration_equals_closed_form_everywhere() {
        for j_max in 0..=16u32 {
            let b = band(j_max);
            for j in b.modes() {
                let slow = enumerate_resonances(j, &b).unwrap();
                let fast = closed_form_resonances(j, &b).unwrap();
                assert_eq!(slow, fast, "j = {j}, J = {j_max}");
                assert!(slow.iter().all(|t| t.resonates_with(j)));
            }
        }
    }

    #[test]
    fn kernel_sum_exact_small_values() {
        assert_eq!(kernel_sum(0, &band(0)).unwrap(), 1.0);
        assert!((kernel_sum(0, &band(1)).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_sum_matches_enumeration_route() {
        for j_max in 0..=12u32 {
            let b = band(j_max);
            for j in b.modes() {
                let direct: f64 = enumerate_resonances(j, &b)
                    .unwrap()
                    .iter()
                    .map(|t| {
                        1.0 / (japanese_bracket_sq(t.j1)
                            * japanese_bracket_sq(t.j2)
                            * japanese_bracket_sq(t.j3))
                    })
                    .sum::<f64>()
                    * japanese_bracket_sq(j);
                let fast = kernel_sum(j, &b).unwrap();
                assert!((direct - fast).abs() < 1e-12, "j = {j}, J = {j_max}");
            }
        }
    }

    #[test]
    fn kernel_sum_monotone_and_bounded() {
        let limit = kernel_series_oracle_j0(1_000_000) + 1.0;
        let mut prev = 0.0;
        for j_max in [0u32, 1, 2, 4, 8, 32, 128, 1024] {
            let v = kernel_sum(0, &band(j_max)).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        for j in [-64i64, -3, 0, 5, 64] {
            let b = band(10_000);
            if b.contains(j) {
                assert!(kernel_sum(j, &b).unwrap() <= limit);
            }
        }
    }

    #[test]
    fn rejects_overflowing_indices() {
        let b = band(16);
        assert!(enumerate_resonances(MAX_MODE_INDEX + 1, &b).is_err());
        assert!(ModeBand::new(1 << 20).is_err());
    }

    #[test]
    fn band_offsets_round_trip() {
        let b = band(3);
        assert_eq!(b.mode_count(), 7);
        for (pos, j) in b.modes().enumerate() {
            assert_eq!(b.offset(j), Some(pos));
        }
        assert_eq!(b.offset(4), None);
    }
}
