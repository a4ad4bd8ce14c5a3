//! Exact symbolic algebra for bosonic operators over labeled modes.
//!
//! Polynomials are kept in canonical normal-ordered form: within every
//! monomial all creation operators precede all annihilation operators and
//! each group is sorted by the mode total order. Distinct modes commute;
//! equal modes satisfy `[a, a†] = 1` (Kronecker-normalized discrete modes).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Coefficients with modulus at or below this are treated as exact zeros
/// and dropped from canonical form.
pub const ZERO_TOL: f64 = 1e-13;

/// Isometry tolerance for linear mode maps and network elements.
pub const ISOMETRY_TOL: f64 = 1e-12;

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("linear mode map is not an isometry on the mapped modes: {0}")]
    NonIsometricMap(String),
}

/// Sideband tag of a mode. Single-frequency analyses use `Single`;
/// two-photon analyses use `Plus`/`Minus` for the fields at the upper and
/// lower sidebands of the carrier. The two regimes never mix within one
/// polynomial handed to the state engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sideband {
    Plus,
    Minus,
    Single,
}

impl fmt::Display for Sideband {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sideband::Plus => write!(f, "+"),
            Sideband::Minus => write!(f, "-"),
            Sideband::Single => Ok(()),
        }
    }
}

/// A labeled bosonic mode. Equality of both fields is mode identity;
/// distinct modes commute in all products. The derived `Ord` (label, then
/// sideband) is the canonical mode total order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId {
    pub label: String,
    pub sideband: Sideband,
}

impl ModeId {
    pub fn single(label: impl Into<String>) -> Self {
        ModeId {
            label: label.into(),
            sideband: Sideband::Single,
        }
    }

    pub fn at(label: impl Into<String>, sideband: Sideband) -> Self {
        ModeId {
            label: label.into(),
            sideband,
        }
    }

    /// Same label, relabeled to the given sideband.
    pub fn with_sideband(&self, sideband: Sideband) -> Self {
        ModeId {
            label: self.label.clone(),
            sideband,
        }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.label, self.sideband)
    }
}

/// Signature of a normal-ordered monomial: sorted creator and annihilator
/// multisets. The coefficient lives in the enclosing polynomial map.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MonomialKey {
    pub creators: Vec<ModeId>,
    pub annihilators: Vec<ModeId>,
}

impl MonomialKey {
    pub fn identity() -> Self {
        MonomialKey {
            creators: Vec::new(),
            annihilators: Vec::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.creators.len() + self.annihilators.len()
    }
}

fn insert_sorted(v: &mut Vec<ModeId>, m: ModeId) {
    let pos = v.partition_point(|x| *x <= m);
    v.insert(pos, m);
}

fn merge_sorted(a: &[ModeId], b: &[ModeId]) -> Vec<ModeId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i].clone());
            i += 1;
        } else {
            out.push(b[j].clone());
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Normal-ordered polynomial in creation/annihilation operators with
/// complex coefficients. No zero coefficients are stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorPoly {
    terms: BTreeMap<MonomialKey, C64>,
}

impl OperatorPoly {
    pub fn zero() -> Self {
        OperatorPoly::default()
    }

    pub fn constant(c: C64) -> Self {
        let mut p = OperatorPoly::zero();
        p.accumulate(MonomialKey::identity(), c);
        p
    }

    pub fn one() -> Self {
        Self::constant(C64::new(1.0, 0.0))
    }

    /// The annihilation operator of a mode.
    pub fn annihilation(mode: ModeId) -> Self {
        let mut p = OperatorPoly::zero();
        p.accumulate(
            MonomialKey {
                creators: Vec::new(),
                annihilators: vec![mode],
            },
            C64::new(1.0, 0.0),
        );
        p
    }

    /// The creation operator of a mode.
    pub fn creation(mode: ModeId) -> Self {
        let mut p = OperatorPoly::zero();
        p.accumulate(
            MonomialKey {
                creators: vec![mode],
                annihilators: Vec::new(),
            },
            C64::new(1.0, 0.0),
        );
        p
    }

    /// The photon-number operator `a† a` of a mode.
    pub fn number(mode: ModeId) -> Self {
        let mut p = OperatorPoly::zero();
        p.accumulate(
            MonomialKey {
                creators: vec![mode.clone()],
                annihilators: vec![mode],
            },
            C64::new(1.0, 0.0),
        );
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonomialKey, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &MonomialKey) -> C64 {
        self.terms.get(key).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    /// Highest monomial degree, 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|k| k.degree()).max().unwrap_or(0)
    }

    /// All mode labels appearing in the polynomial, deduplicated.
    pub fn modes(&self) -> Vec<ModeId> {
        let mut set = std::collections::BTreeSet::new();
        for key in self.terms.keys() {
            set.extend(key.creators.iter().cloned());
            set.extend(key.annihilators.iter().cloned());
        }
        set.into_iter().collect()
    }

    /// True when the polynomial does not mix `Single`-band modes with
    /// `Plus`/`Minus` sideband modes.
    pub fn sidebands_consistent(&self) -> bool {
        let modes = self.modes();
        let has_single = modes.iter().any(|m| m.sideband == Sideband::Single);
        let has_pm = modes.iter().any(|m| m.sideband != Sideband::Single);
        !(has_single && has_pm)
    }

    fn accumulate(&mut self, key: MonomialKey, coeff: C64) {
        if coeff.norm() <= ZERO_TOL {
            return;
        }
        let entry = self.terms.entry(key).or_insert(C64::new(0.0, 0.0));
        *entry += coeff;
        if entry.norm() <= ZERO_TOL {
            // remove the now-zero entry; key needs re-lookup
            let dead: Vec<MonomialKey> = self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() <= ZERO_TOL)
                .map(|(k, _)| k.clone())
                .collect();
            for k in dead {
                self.terms.remove(&k);
            }
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = OperatorPoly::zero();
        for (k, v) in &self.terms {
            out.accumulate(k.clone(), v * c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.accumulate(k.clone(), *v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Normal-ordered product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = OperatorPoly::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                for (count, crs, ans) in cross_order(&k1.annihilators, &k2.creators) {
                    let key = MonomialKey {
                        creators: merge_sorted(&k1.creators, &crs),
                        annihilators: merge_sorted(&ans, &k2.annihilators),
                    };
                    out.accumulate(key, c1 * c2 * C64::new(count, 0.0));
                }
            }
        }
        out
    }

    /// Hermitian adjoint: conjugates coefficients, swaps creators and
    /// annihilators. Involutive anti-homomorphism.
    pub fn adjoint(&self) -> Self {
        let mut out = OperatorPoly::zero();
        for (k, v) in &self.terms {
            out.accumulate(
                MonomialKey {
                    creators: k.annihilators.clone(),
                    annihilators: k.creators.clone(),
                },
                v.conj(),
            );
        }
        out
    }

    /// `[a, b] = ab - ba`.
    pub fn commutator(a: &Self, b: &Self) -> Self {
        a.mul(b).sub(&b.mul(a))
    }

    /// Substitutes each mapped mode's annihilation operator by its linear
    /// combination; creators transform by the conjugate map. Errors unless
    /// the map is an isometry on the mapped modes.
    pub fn substitute(&self, map: &LinearModeMap) -> Result<Self, AlgebraError> {
        map.check_isometry()?;
        let mut out = OperatorPoly::zero();
        for (k, v) in &self.terms {
            let mut factor = OperatorPoly::constant(*v);
            for m in &k.creators {
                factor = factor.mul(&map.image_creation(m));
            }
            for m in &k.annihilators {
                factor = factor.mul(&map.image_annihilation(m));
            }
            out = out.add(&factor);
        }
        Ok(out)
    }

    /// Relabels every mode to the given sideband.
    pub fn at_sideband(&self, sideband: Sideband) -> Self {
        let mut out = OperatorPoly::zero();
        for (k, v) in &self.terms {
            let mut creators: Vec<ModeId> =
                k.creators.iter().map(|m| m.with_sideband(sideband)).collect();
            let mut annihilators: Vec<ModeId> = k
                .annihilators
                .iter()
                .map(|m| m.with_sideband(sideband))
                .collect();
            creators.sort();
            annihilators.sort();
            out.accumulate(
                MonomialKey {
                    creators,
                    annihilators,
                },
                *v,
            );
        }
        out
    }

    /// Term-set equality within a tolerance on each coefficient.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let keys: std::collections::BTreeSet<&MonomialKey> =
            self.terms.keys().chain(other.terms.keys()).collect();
        keys.into_iter()
            .all(|k| (self.coeff(k) - other.coeff(k)).norm() <= tol)
    }
}

/// Moves a block of annihilators left past a block of creators, returning
/// the normal-ordered expansion `(count, creators, annihilators)` of
/// `(prod anns) (prod crs†)`. Counts are commutator contraction
/// multiplicities, always positive integers.
fn cross_order(anns: &[ModeId], crs: &[ModeId]) -> Vec<(f64, Vec<ModeId>, Vec<ModeId>)> {
    if anns.is_empty() || crs.is_empty() {
        return vec![(1.0, crs.to_vec(), anns.to_vec())];
    }
    let y = &crs[0];
    let rest = &crs[1..];
    let mut out = Vec::new();
    // a_y† commutes through the annihilator block: direct term...
    for (count, mut cr, an) in cross_order(anns, rest) {
        insert_sorted(&mut cr, y.clone());
        out.push((count, cr, an));
    }
    // ...plus one contraction per matching annihilator.
    let mult = anns.iter().filter(|m| *m == y).count();
    if mult > 0 {
        let mut reduced = anns.to_vec();
        let pos = reduced.iter().position(|m| m == y).unwrap();
        reduced.remove(pos);
        for (count, cr, an) in cross_order(&reduced, rest) {
            out.push((count * mult as f64, cr, an));
        }
    }
    out
}

impl fmt::Display for OperatorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, v) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)", v.re, v.im)?;
            for m in &k.creators {
                write!(f, " {}†", m)?;
            }
            for m in &k.annihilators {
                write!(f, " {}", m)?;
            }
        }
        Ok(())
    }
}

impl std::ops::Add for &OperatorPoly {
    type Output = OperatorPoly;
    fn add(self, rhs: &OperatorPoly) -> OperatorPoly {
        OperatorPoly::add(self, rhs)
    }
}

impl std::ops::Sub for &OperatorPoly {
    type Output = OperatorPoly;
    fn sub(self, rhs: &OperatorPoly) -> OperatorPoly {
        OperatorPoly::sub(self, rhs)
    }
}

impl std::ops::Mul for &OperatorPoly {
    type Output = OperatorPoly;
    fn mul(self, rhs: &OperatorPoly) -> OperatorPoly {
        OperatorPoly::mul(self, rhs)
    }
}

/// A complex-linear map on annihilation operators: each mapped mode goes to
/// a linear combination of target modes. Unmapped modes act as identity.
#[derive(Debug, Clone, Default)]
pub struct LinearModeMap {
    entries: BTreeMap<ModeId, Vec<(ModeId, C64)>>,
}

impl LinearModeMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: ModeId, image: Vec<(ModeId, C64)>) {
        self.entries.insert(from, image);
    }

    pub fn get(&self, mode: &ModeId) -> Option<&[(ModeId, C64)]> {
        self.entries.get(mode).map(|v| v.as_slice())
    }

    fn image_annihilation(&self, mode: &ModeId) -> OperatorPoly {
        match self.entries.get(mode) {
            None => OperatorPoly::annihilation(mode.clone()),
            Some(image) => {
                let mut p = OperatorPoly::zero();
                for (target, c) in image {
                    p = p.add(&OperatorPoly::annihilation(target.clone()).scale(*c));
                }
                p
            }
        }
    }

    fn image_creation(&self, mode: &ModeId) -> OperatorPoly {
        match self.entries.get(mode) {
            None => OperatorPoly::creation(mode.clone()),
            Some(image) => {
                let mut p = OperatorPoly::zero();
                for (target, c) in image {
                    p = p.add(&OperatorPoly::creation(target.clone()).scale(c.conj()));
                }
                p
            }
        }
    }

    /// Columns of the mapped modes must be orthonormal; a failure signals a
    /// non-physical (non-unitary) network element.
    pub fn check_isometry(&self) -> Result<(), AlgebraError> {
        let cols: Vec<(&ModeId, &Vec<(ModeId, C64)>)> = self.entries.iter().collect();
        for (i, (mi, ci)) in cols.iter().enumerate() {
            for (j, (mj, cj)) in cols.iter().enumerate().skip(i) {
                let mut dot = C64::new(0.0, 0.0);
                for (t1, c1) in ci.iter() {
                    for (t2, c2) in cj.iter() {
                        if t1 == t2 {
                            dot += c1.conj() * c2;
                        }
                    }
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - C64::new(expected, 0.0)).norm() > ISOMETRY_TOL {
                    return Err(AlgebraError::NonIsometricMap(format!(
                        "columns {mi} and {mj} have inner product {dot}"
                    )));
                }
            }
        }
        Ok(())
    }
}
