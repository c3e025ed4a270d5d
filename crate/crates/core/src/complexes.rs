//! Finite free chain complexes over ℤ, filtrations, chain maps and (filtered) chain homotopies.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::algebra::{presented_homology, FgAbGroup, IntMatrix, Quotient, Subgroup};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComplexError {
    #[error("differential in degree {degree} has shape {found:?}, expected {expected:?}")]
    Shape {
        degree: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("d∘d ≠ 0: {source_label} (degree {degree}) reaches {target_label} with coefficient {coefficient}")]
    NotAComplex {
        degree: usize,
        source_label: String,
        target_label: String,
        coefficient: BigInt,
    },
    #[error("degree {degree}: {source_label} (level {source_level}) maps to {target_label} (level {target_level})")]
    Filtration {
        degree: usize,
        source_label: String,
        target_label: String,
        source_level: usize,
        target_level: usize,
    },
    #[error("levels given for {found} generators in degree {degree}, expected {expected}")]
    LevelCount {
        degree: usize,
        expected: usize,
        found: usize,
    },
}

/// Free complex `C_0 ← C_1 ← … ← C_top` with labelled bases; `∂_n : C_n → C_{n−1}` is a
/// `dim C_{n−1} × dim C_n` matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GradedComplex {
    labels: Vec<Vec<String>>,
    diffs: Vec<IntMatrix>,
}

impl GradedComplex {
    /// `diffs[n]` is `∂_n`; `diffs[0]` may be omitted (it is the zero map to nothing).
    /// Missing trailing differentials are treated as zero.
    pub fn new(labels: Vec<Vec<String>>, diffs: Vec<IntMatrix>) -> Result<Self, ComplexError> {
        let top = labels.len();
        let mut full = Vec::with_capacity(top);
        for n in 0..top {
            let expected = (
                if n == 0 { 0 } else { labels[n - 1].len() },
                labels[n].len(),
            );
            let m = if n == 0 {
                IntMatrix::zeros(0, labels[0].len())
            } else {
                diffs
                    .get(n)
                    .cloned()
                    .unwrap_or_else(|| IntMatrix::zeros(expected.0, expected.1))
            };
            if m.shape() != expected {
                return Err(ComplexError::Shape {
                    degree: n,
                    expected,
                    found: m.shape(),
                });
            }
            full.push(m);
        }
        let c = GradedComplex {
            labels,
            diffs: full,
        };
        c.check_square_zero()?;
        Ok(c)
    }

    fn check_square_zero(&self) -> Result<(), ComplexError> {
        for n in 2..self.labels.len() {
            let dd = self.diffs[n - 1].mul(&self.diffs[n]);
            if let Some((r, c, v)) = first_nonzero(&dd) {
                return Err(ComplexError::NotAComplex {
                    degree: n,
                    source_label: self.labels[n][c].clone(),
                    target_label: self.labels[n - 2][r].clone(),
                    coefficient: v,
                });
            }
        }
        Ok(())
    }

    /// Number of degrees stored (degrees `0..len`).
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.iter().all(Vec::is_empty)
    }

    pub fn dim(&self, n: usize) -> usize {
        self.labels.get(n).map_or(0, Vec::len)
    }

    pub fn labels(&self, n: usize) -> &[String] {
        self.labels.get(n).map_or(&[], Vec::as_slice)
    }

    /// `∂_n`, with zero matrices outside the stored range.
    pub fn d(&self, n: usize) -> IntMatrix {
        match self.diffs.get(n) {
            Some(m) => m.clone(),
            None => IntMatrix::zeros(if n == 0 { 0 } else { self.dim(n - 1) }, self.dim(n)),
        }
    }

    pub fn d_ref(&self, n: usize) -> Option<&IntMatrix> {
        self.diffs.get(n)
    }

    /// `H_n` as an explicit quotient of cycles by boundaries inside `C_n`.
    pub fn homology_at(&self, n: usize) -> Quotient {
        let below = if n == 0 { 0 } else { self.dim(n - 1) };
        presented_homology(
            &self.d(n + 1),
            &Subgroup::trivial(self.dim(n)),
            &self.d(n),
            &Subgroup::trivial(below),
        )
        .expect("valid complex")
    }

    pub fn homology(&self) -> Vec<FgAbGroup> {
        (0..self.len())
            .map(|n| self.homology_at(n).group().clone())
            .collect()
    }

    /// Cochain complex `Hom(C, ℤ)` regraded homologically: degree `n` of the result is
    /// `C^{top−n}` with differential `∂ᵀ`.
    pub fn dual(&self) -> GradedComplex {
        let len = self.len();
        if len == 0 {
            return self.clone();
        }
        let top = len - 1;
        let labels: Vec<Vec<String>> = (0..len).map(|n| self.labels[top - n].clone()).collect();
        let mut diffs = vec![IntMatrix::zeros(0, labels[0].len())];
        for n in 1..len {
            // C^{top-n} → C^{top-n+1} is the transpose of ∂_{top-n+1}
            diffs.push(self.d(top - n + 1).transpose());
        }
        GradedComplex { labels, diffs }
    }

    /// Same complex with every differential replaced by `u_{n−1} ∂_n u_n⁻¹` for unimodular
    /// basis changes `u_n` (given together with their inverses).
    pub fn change_basis(&self, u: &[(IntMatrix, IntMatrix)]) -> GradedComplex {
        let mut diffs = vec![self.d(0)];
        for n in 1..self.len() {
            diffs.push(u[n - 1].0.mul(&self.diffs[n]).mul(&u[n].1));
        }
        GradedComplex {
            labels: self.labels.clone(),
            diffs,
        }
    }
}

fn first_nonzero(m: &IntMatrix) -> Option<(usize, usize, BigInt)> {
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            if !m[(r, c)].is_zero() {
                return Some((r, c, m[(r, c)].clone()));
            }
        }
    }
    None
}

/// Complex with an increasing filtration: each generator carries a level and the differential
/// never raises levels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FilteredComplex {
    complex: GradedComplex,
    levels: Vec<Vec<usize>>,
}

impl FilteredComplex {
    pub fn new(complex: GradedComplex, levels: Vec<Vec<usize>>) -> Result<Self, ComplexError> {
        verify_filtered(&complex, &levels)?;
        Ok(FilteredComplex { complex, levels })
    }

    /// All generators in level 0.
    pub fn trivially_filtered(complex: GradedComplex) -> Self {
        let levels = (0..complex.len())
            .map(|n| vec![0; complex.dim(n)])
            .collect();
        FilteredComplex { complex, levels }
    }

    pub fn complex(&self) -> &GradedComplex {
        &self.complex
    }

    pub fn levels(&self, n: usize) -> &[usize] {
        self.levels.get(n).map_or(&[], Vec::as_slice)
    }

    pub fn max_level(&self) -> usize {
        self.levels.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Basis indices in degree `n` with level `≤ p` (with `p < 0` meaning none).
    pub fn filtration_indices(&self, n: usize, p: i64) -> Vec<usize> {
        self.levels(n)
            .iter()
            .enumerate()
            .filter(|(_, &l)| (l as i64) <= p)
            .map(|(i, _)| i)
            .collect()
    }

    /// `F_p C_n` as a coordinate sublattice of `C_n`.
    pub fn filtration_subgroup(&self, n: usize, p: i64) -> Subgroup {
        Subgroup::coordinate(self.complex.dim(n), self.filtration_indices(n, p))
    }

    /// Filtration level of a chain: the largest level in its support (−1 for zero).
    pub fn level_of(&self, n: usize, x: &[BigInt]) -> i64 {
        x.iter()
            .zip(self.levels(n))
            .filter(|(c, _)| !c.is_zero())
            .map(|(_, &l)| l as i64)
            .max()
            .unwrap_or(-1)
    }
}

/// Checks `∂² = 0` and that `∂` never raises the filtration level.
pub fn verify_filtered(c: &GradedComplex, levels: &[Vec<usize>]) -> Result<(), ComplexError> {
    c.check_square_zero()?;
    for n in 0..c.len() {
        let found = levels.get(n).map_or(0, Vec::len);
        if found != c.dim(n) {
            return Err(ComplexError::LevelCount {
                degree: n,
                expected: c.dim(n),
                found,
            });
        }
    }
    for n in 1..c.len() {
        let d = c.d(n);
        for col in 0..d.cols() {
            for row in 0..d.rows() {
                if !d[(row, col)].is_zero() && levels[n - 1][row] > levels[n][col] {
                    return Err(ComplexError::Filtration {
                        degree: n,
                        source_label: c.labels(n)[col].clone(),
                        target_label: c.labels(n - 1)[row].clone(),
                        source_level: levels[n][col],
                        target_level: levels[n - 1][row],
                    });
                }
            }
        }
    }
    Ok(())
}

/// Degreewise family of matrices `C_n → C'_{n+shift}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GradedMap {
    pub shift: usize,
    pub maps: Vec<IntMatrix>,
}

pub type ChainMap = GradedMap;

impl GradedMap {
    pub fn new(shift: usize, maps: Vec<IntMatrix>) -> Self {
        GradedMap { shift, maps }
    }

    pub fn zero(shift: usize, source: &GradedComplex, target: &GradedComplex) -> Self {
        let maps = (0..source.len())
            .map(|n| IntMatrix::zeros(target.dim(n + shift), source.dim(n)))
            .collect();
        GradedMap { shift, maps }
    }

    pub fn identity(c: &GradedComplex) -> Self {
        GradedMap {
            shift: 0,
            maps: (0..c.len())
                .map(|n| IntMatrix::identity(c.dim(n)))
                .collect(),
        }
    }

    /// Map in source degree `n`, zero when not stored.
    pub fn at(&self, n: usize, source: &GradedComplex, target: &GradedComplex) -> IntMatrix {
        match self.maps.get(n) {
            Some(m) => m.clone(),
            None => IntMatrix::zeros(target.dim(n + self.shift), source.dim(n)),
        }
    }

    fn check_shapes(&self, source: &GradedComplex, target: &GradedComplex) -> Result<(), MapError> {
        for (n, m) in self.maps.iter().enumerate() {
            let expected = (target.dim(n + self.shift), source.dim(n));
            if m.shape() != expected {
                return Err(MapError::Shape {
                    degree: n,
                    expected,
                    found: m.shape(),
                });
            }
        }
        Ok(())
    }

    pub fn compose(
        &self,
        first: &GradedMap,
        a: &GradedComplex,
        b: &GradedComplex,
        c: &GradedComplex,
    ) -> GradedMap {
        let maps = (0..a.len())
            .map(|n| self.at(n + first.shift, b, c).mul(&first.at(n, a, b)))
            .collect();
        GradedMap {
            shift: self.shift + first.shift,
            maps,
        }
    }

    pub fn sub(
        &self,
        other: &GradedMap,
        source: &GradedComplex,
        target: &GradedComplex,
    ) -> GradedMap {
        assert_eq!(self.shift, other.shift);
        let maps = (0..source.len())
            .map(|n| self.at(n, source, target).sub(&other.at(n, source, target)))
            .collect();
        GradedMap {
            shift: self.shift,
            maps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("map in degree {degree} has shape {found:?}, expected {expected:?}")]
    Shape {
        degree: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("identity fails in degree {degree}; residual {residual:?}")]
    Residual { degree: usize, residual: IntMatrix },
    #[error("degree {degree}: generator {source_index} at level {source_level} reaches generator {target_index} at level {target_level}")]
    Filtration {
        degree: usize,
        source_index: usize,
        target_index: usize,
        source_level: usize,
        target_level: usize,
    },
}

/// Checks `∂' Φ = Φ ∂` in every degree.
pub fn verify_chain_map(
    phi: &ChainMap,
    source: &GradedComplex,
    target: &GradedComplex,
) -> Result<(), MapError> {
    assert_eq!(phi.shift, 0, "chain maps preserve degree");
    phi.check_shapes(source, target)?;
    for n in 0..source.len().max(1) {
        let lhs = target.d(n).mul(&phi.at(n, source, target));
        let rhs = if n == 0 {
            IntMatrix::zeros(lhs.rows(), lhs.cols())
        } else {
            phi.at(n - 1, source, target).mul(&source.d(n))
        };
        let r = lhs.sub(&rhs);
        if !r.is_zero() {
            return Err(MapError::Residual {
                degree: n,
                residual: r,
            });
        }
    }
    Ok(())
}

/// Checks that `m` raises filtration levels by at most `allowance`.
pub fn verify_filtration_raise(
    m: &GradedMap,
    source: &FilteredComplex,
    target: &FilteredComplex,
    allowance: usize,
) -> Result<(), MapError> {
    for (n, mat) in m.maps.iter().enumerate() {
        let sl = source.levels(n);
        let tl = target.levels(n + m.shift);
        for c in 0..mat.cols() {
            for r in 0..mat.rows() {
                if !mat[(r, c)].is_zero() && tl[r] > sl[c] + allowance {
                    return Err(MapError::Filtration {
                        degree: n,
                        source_index: c,
                        target_index: r,
                        source_level: sl[c],
                        target_level: tl[r],
                    });
                }
            }
        }
    }
    Ok(())
}

pub fn verify_filtered_chain_map(
    phi: &ChainMap,
    source: &FilteredComplex,
    target: &FilteredComplex,
) -> Result<(), MapError> {
    verify_chain_map(phi, source.complex(), target.complex())?;
    verify_filtration_raise(phi, source, target, 0)
}

/// Checks `∂'K + K∂ = Φ₀ − Φ₁`.
pub fn verify_homotopy(
    k: &GradedMap,
    phi0: &ChainMap,
    phi1: &ChainMap,
    source: &GradedComplex,
    target: &GradedComplex,
) -> Result<(), MapError> {
    assert_eq!(k.shift, 1, "homotopies raise degree by one");
    k.check_shapes(source, target)?;
    for n in 0..source.len() {
        let mut lhs = target.d(n + 1).mul(&k.at(n, source, target));
        if n > 0 {
            lhs = lhs.add(&k.at(n - 1, source, target).mul(&source.d(n)));
        }
        let rhs = phi0.at(n, source, target).sub(&phi1.at(n, source, target));
        let r = lhs.sub(&rhs);
        if !r.is_zero() {
            return Err(MapError::Residual {
                degree: n,
                residual: r,
            });
        }
    }
    Ok(())
}

/// Homotopy check plus the filtered condition: `K` raises levels by at most one.
pub fn verify_filtered_homotopy(
    k: &GradedMap,
    phi0: &ChainMap,
    phi1: &ChainMap,
    source: &FilteredComplex,
    target: &FilteredComplex,
) -> Result<(), MapError> {
    verify_homotopy(k, phi0, phi1, source.complex(), target.complex())?;
    verify_filtration_raise(k, source, target, 1)
}

/// Checks `∂L − L∂ = K₀ − K₁` for a degree-two map `L`.
pub fn verify_second_homotopy(
    l: &GradedMap,
    k0: &GradedMap,
    k1: &GradedMap,
    source: &GradedComplex,
    target: &GradedComplex,
) -> Result<(), MapError> {
    assert_eq!(l.shift, 2);
    l.check_shapes(source, target)?;
    for n in 0..source.len() {
        let mut lhs = target.d(n + 2).mul(&l.at(n, source, target));
        if n > 0 {
            lhs = lhs.sub(&l.at(n - 1, source, target).mul(&source.d(n)));
        }
        let rhs = k0.at(n, source, target).sub(&k1.at(n, source, target));
        let r = lhs.sub(&rhs);
        if !r.is_zero() {
            return Err(MapError::Residual {
                degree: n,
                residual: r,
            });
        }
    }
    Ok(())
}

/// Whether a chain map induces isomorphisms on homology in every degree.
pub fn induces_homology_iso(
    phi: &ChainMap,
    source: &GradedComplex,
    target: &GradedComplex,
) -> bool {
    let len = source.len().max(target.len());
    (0..len).all(|n| {
        let hs = source.homology_at(n);
        let ht = target.homology_at(n);
        if hs.ambient_rank() == 0 && ht.ambient_rank() == 0 {
            return true;
        }
        let f = phi.at(n, source, target);
        if f.shape() != (ht.ambient_rank(), hs.ambient_rank()) {
            return false;
        }
        hs.induced_is_iso(&f, &ht).unwrap_or(false)
    })
}

/// Labels `prefix0, prefix1, …`.
pub fn numbered_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}
