//! Multi-family Grassmann algebras with complex coefficients.
//!
//! Generators inside one family anticommute; generators of different families
//! commute (`ξᵢχⱼ = χⱼξᵢ`). Momenta, when attached, belong to the family of
//! their coordinate. Elements are kept in a normal form: every monomial is a
//! strictly increasing list of generators and the reordering sign lives in
//! the coefficient.
//!
//! Because the families commute with each other, the natural grading is a
//! parity per family rather than a single total parity. Every sign rule in
//! this module (reordering, product reversal under the involutions, the
//! graded bracket) is the commutation factor of that multi-grading; for a
//! single family it is the familiar `(−1)^{P_f P_g}`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::CMatrix;

/// Absolute tolerance used for coefficient comparisons.
pub const COEFF_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrassmannError {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("generator {0} does not belong to the algebra")]
    UnknownGenerator(String),
    #[error("cannot parse generator name {0:?}")]
    BadGeneratorName(String),
    #[error("elements belong to different algebras")]
    AlgebraMismatch,
    #[error("element has no definite parity")]
    IndefiniteParity,
    #[error("the algebra has no momenta attached")]
    NoMomenta,
    #[error("bracket of constraints {0} and {1} is not a number")]
    NonScalarConstraintBracket(usize, usize),
    #[error("constraint matrix is singular")]
    SingularConstraints,
    #[error("matrix has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("monomial {0} is not in canonical order")]
    NonCanonical(String),
    #[error("monomial {0} appears twice")]
    DuplicateMonomial(String),
    #[error("malformed element document: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Coordinate,
    Momentum,
}

/// One generator: family, coordinate-or-momentum, 0-based index in the family.
///
/// The derived ordering (family, slot, index) is the canonical monomial order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator {
    pub family: usize,
    pub slot: Slot,
    pub index: usize,
}

impl Generator {
    pub const fn coord(family: usize, index: usize) -> Self {
        Self {
            family,
            slot: Slot::Coordinate,
            index,
        }
    }

    pub const fn momentum(family: usize, index: usize) -> Self {
        Self {
            family,
            slot: Slot::Momentum,
            index,
        }
    }

    pub fn is_momentum(&self) -> bool {
        self.slot == Slot::Momentum
    }

    /// The coordinate paired with this generator (itself for coordinates).
    pub fn partner(&self) -> Self {
        Self::coord(self.family, self.index)
    }
}

/// Names: `xi1`, `pi1` for family 0; `chi1`, `varpi1` for family 1; and the
/// generic `x<f>_<i>` / `p<f>_<i>` (both 1-based) for any family.
impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = self.index + 1;
        match (self.family, self.slot) {
            (0, Slot::Coordinate) => write!(f, "xi{i}"),
            (0, Slot::Momentum) => write!(f, "pi{i}"),
            (1, Slot::Coordinate) => write!(f, "chi{i}"),
            (1, Slot::Momentum) => write!(f, "varpi{i}"),
            (fam, Slot::Coordinate) => write!(f, "x{}_{i}", fam + 1),
            (fam, Slot::Momentum) => write!(f, "p{}_{i}", fam + 1),
        }
    }
}

impl FromStr for Generator {
    type Err = GrassmannError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GrassmannError::BadGeneratorName(s.to_string());
        let one_based = |digits: &str| -> Result<usize, GrassmannError> {
            match digits.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(bad()),
            }
        };
        for (prefix, family, slot) in [
            ("varpi", 1, Slot::Momentum),
            ("chi", 1, Slot::Coordinate),
            ("xi", 0, Slot::Coordinate),
            ("pi", 0, Slot::Momentum),
        ] {
            if let Some(rest) = s.strip_prefix(prefix) {
                if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                    return Ok(Generator {
                        family,
                        slot,
                        index: one_based(rest)?,
                    });
                }
            }
        }
        let (slot, rest) = if let Some(r) = s.strip_prefix('x') {
            (Slot::Coordinate, r)
        } else if let Some(r) = s.strip_prefix('p') {
            (Slot::Momentum, r)
        } else {
            return Err(bad());
        };
        let (fam, idx) = rest.split_once('_').ok_or_else(bad)?;
        Ok(Generator {
            family: one_based(fam)?,
            slot,
            index: one_based(idx)?,
        })
    }
}

/// Shape of a multi-family Grassmann algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlgebraSpec {
    family_sizes: Vec<usize>,
    momenta: bool,
}

impl AlgebraSpec {
    pub fn new(family_sizes: Vec<usize>, momenta: bool) -> Result<Self, GrassmannError> {
        if family_sizes.is_empty() {
            return Err(GrassmannError::InvalidAlgebra("at least one family is required".into()));
        }
        if family_sizes.iter().any(|&n| n == 0) {
            return Err(GrassmannError::InvalidAlgebra("family sizes must be positive".into()));
        }
        Ok(Self {
            family_sizes,
            momenta,
        })
    }

    /// One fully anticommuting family of `n` generators.
    pub fn single(n: usize) -> Self {
        Self::new(vec![n], false).expect("n must be positive")
    }

    pub fn with_momenta(mut self) -> Self {
        self.momenta = true;
        self
    }

    pub fn without_momenta(mut self) -> Self {
        self.momenta = false;
        self
    }

    pub fn family_sizes(&self) -> &[usize] {
        &self.family_sizes
    }

    pub fn num_families(&self) -> usize {
        self.family_sizes.len()
    }

    pub fn has_momenta(&self) -> bool {
        self.momenta
    }

    /// Total number of coordinate generators `n = Σ family_sizes`.
    pub fn num_coordinates(&self) -> usize {
        self.family_sizes.iter().sum()
    }

    pub fn contains(&self, g: &Generator) -> bool {
        g.family < self.family_sizes.len()
            && g.index < self.family_sizes[g.family]
            && (self.momenta || g.slot == Slot::Coordinate)
    }

    /// Coordinates in canonical order.
    pub fn coordinates(&self) -> Vec<Generator> {
        self.family_sizes
            .iter()
            .enumerate()
            .flat_map(|(f, &n)| (0..n).map(move |i| Generator::coord(f, i)))
            .collect()
    }

    /// All generators in canonical order.
    pub fn generators(&self) -> Vec<Generator> {
        let mut out = Vec::new();
        for (f, &n) in self.family_sizes.iter().enumerate() {
            out.extend((0..n).map(|i| Generator::coord(f, i)));
            if self.momenta {
                out.extend((0..n).map(|i| Generator::momentum(f, i)));
            }
        }
        out
    }

    /// Position of a coordinate in the merged index set `0..n`.
    pub fn coordinate_position(&self, g: &Generator) -> Option<usize> {
        if g.slot != Slot::Coordinate || !self.contains(g) {
            return None;
        }
        Some(self.family_sizes[..g.family].iter().sum::<usize>() + g.index)
    }

    pub fn coordinate_at(&self, position: usize) -> Option<Generator> {
        let mut offset = 0;
        for (f, &n) in self.family_sizes.iter().enumerate() {
            if position < offset + n {
                return Some(Generator::coord(f, position - offset));
            }
            offset += n;
        }
        None
    }

    /// Same families, ignoring whether momenta are attached.
    pub fn same_coordinates(&self, other: &AlgebraSpec) -> bool {
        self.family_sizes == other.family_sizes
    }

    fn check(&self, g: &Generator) -> Result<(), GrassmannError> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(GrassmannError::UnknownGenerator(g.to_string()))
        }
    }
}

/// Per-family parity. Two homogeneous elements commute up to
/// `(−1)^{Σ_f p_f(a) p_f(b)}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grading(Vec<bool>);

impl Grading {
    pub fn even(families: usize) -> Self {
        Grading(vec![false; families])
    }

    pub fn parities(&self) -> &[bool] {
        &self.0
    }

    pub fn total_parity(&self) -> bool {
        self.0.iter().filter(|&&p| p).count() % 2 == 1
    }

    pub fn commutation_sign(&self, other: &Grading) -> f64 {
        let odd_pairs = self
            .0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| **a && **b)
            .count();
        if odd_pairs % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// A strictly increasing product of distinct generators; the empty monomial is `1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<Generator>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    /// Accepts only sequences already in canonical order.
    pub fn from_canonical(generators: Vec<Generator>) -> Result<Self, GrassmannError> {
        if generators.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GrassmannError::NonCanonical(format_generators(&generators)));
        }
        Ok(Monomial(generators))
    }

    pub fn generators(&self) -> &[Generator] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, g: &Generator) -> bool {
        self.0.binary_search(g).is_ok()
    }

    pub fn has_momenta(&self) -> bool {
        self.0.iter().any(Generator::is_momentum)
    }

    pub fn grading(&self, families: usize) -> Grading {
        let mut p = vec![false; families];
        for g in &self.0 {
            p[g.family] ^= true;
        }
        Grading(p)
    }

    /// Sign picked up by writing the generators in reverse order.
    fn reversal_sign(&self) -> f64 {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for g in &self.0 {
            *counts.entry(g.family).or_default() += 1;
        }
        let swaps: usize = counts.values().map(|k| k * k.saturating_sub(1) / 2).sum();
        if swaps % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        write!(f, "{}", format_generators(&self.0))
    }
}

fn format_generators(gs: &[Generator]) -> String {
    gs.iter().map(|g| g.to_string()).collect::<Vec<_>>().join("*")
}

/// Sorts a generator word into canonical order.
///
/// Returns `None` when a generator repeats (the product vanishes), otherwise
/// the sorted monomial and the reordering sign. Only swaps of generators in
/// the same family contribute a factor `−1`.
pub fn canonical_order(word: &[Generator]) -> Option<(Monomial, f64)> {
    let mut inversions = 0usize;
    for i in 0..word.len() {
        for j in (i + 1)..word.len() {
            if word[i] == word[j] {
                return None;
            }
            if word[i] > word[j] && word[i].family == word[j].family {
                inversions += 1;
            }
        }
    }
    let mut sorted = word.to_vec();
    sorted.sort_unstable();
    let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
    Some((Monomial(sorted), sign))
}

/// A finitely supported complex combination of canonical monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannElement {
    algebra: AlgebraSpec,
    terms: BTreeMap<Monomial, Complex64>,
}

impl GrassmannElement {
    pub fn zero(algebra: &AlgebraSpec) -> Self {
        Self {
            algebra: algebra.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(algebra: &AlgebraSpec, c: Complex64) -> Self {
        let mut e = Self::zero(algebra);
        e.accumulate(Monomial::one(), c);
        e
    }

    pub fn one(algebra: &AlgebraSpec) -> Self {
        Self::scalar(algebra, Complex64::new(1.0, 0.0))
    }

    pub fn generator(algebra: &AlgebraSpec, g: Generator) -> Result<Self, GrassmannError> {
        algebra.check(&g)?;
        let mut e = Self::zero(algebra);
        e.accumulate(Monomial(vec![g]), Complex64::new(1.0, 0.0));
        Ok(e)
    }

    /// Builds an element from arbitrary generator words, bringing each into
    /// canonical order and absorbing the reordering sign.
    pub fn canonicalize<I, W>(algebra: &AlgebraSpec, raw_terms: I) -> Result<Self, GrassmannError>
    where
        I: IntoIterator<Item = (W, Complex64)>,
        W: AsRef<[Generator]>,
    {
        let mut e = Self::zero(algebra);
        for (word, c) in raw_terms {
            let word = word.as_ref();
            for g in word {
                algebra.check(g)?;
            }
            if let Some((mono, sign)) = canonical_order(word) {
                e.accumulate(mono, c * sign);
            }
        }
        Ok(e)
    }

    /// Linear form `Σ cᵢ ξᵢ` over the merged coordinate index set.
    pub fn linear(algebra: &AlgebraSpec, coefficients: &[Complex64]) -> Result<Self, GrassmannError> {
        if coefficients.len() != algebra.num_coordinates() {
            return Err(GrassmannError::DimensionMismatch {
                expected: algebra.num_coordinates(),
                found: coefficients.len(),
            });
        }
        let mut e = Self::zero(algebra);
        for (pos, &c) in coefficients.iter().enumerate() {
            let g = algebra.coordinate_at(pos).expect("position within range");
            e.accumulate(Monomial(vec![g]), c);
        }
        Ok(e)
    }

    fn accumulate(&mut self, mono: Monomial, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        match self.terms.entry(mono) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                // exact cancellation
                if *o.get() == Complex64::new(0.0, 0.0) {
                    o.remove();
                }
            }
        }
    }

    pub fn algebra(&self) -> &AlgebraSpec {
        &self.algebra
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mono: &Monomial) -> Complex64 {
        self.terms.get(mono).copied().unwrap_or_default()
    }

    /// Coefficient of the monomial spelled by `word` (in any order).
    pub fn coefficient_of(&self, word: &[Generator]) -> Complex64 {
        match canonical_order(word) {
            Some((mono, sign)) => self.coefficient(&mono) * sign,
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn has_momenta(&self) -> bool {
        self.terms.keys().any(Monomial::has_momenta)
    }

    /// Scalar part (coefficient of `1`) if the element is a pure number.
    pub fn as_scalar(&self) -> Option<Complex64> {
        match self.terms.len() {
            0 => Some(Complex64::new(0.0, 0.0)),
            1 => self.terms.get(&Monomial::one()).copied(),
            _ => None,
        }
    }

    /// Multi-grading shared by every term, or `None` for mixed elements.
    /// The zero element counts as even.
    pub fn grading(&self) -> Option<Grading> {
        let families = self.algebra.num_families();
        let mut it = self.terms.keys().map(|m| m.grading(families));
        let first = match it.next() {
            Some(g) => g,
            None => return Some(Grading::even(families)),
        };
        it.all(|g| g == first).then_some(first)
    }

    /// Total parity (degree mod 2) when all terms agree on it.
    pub fn parity(&self) -> Option<bool> {
        let mut it = self.terms.keys().map(|m| m.degree() % 2 == 1);
        let first = it.next().unwrap_or(false);
        it.all(|p| p == first).then_some(first)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut e = Self::zero(&self.algebra);
        for (m, v) in &self.terms {
            e.accumulate(m.clone(), v * c);
        }
        e
    }

    fn ensure_same(&self, other: &Self) -> Result<(), GrassmannError> {
        if self.algebra == other.algebra {
            Ok(())
        } else {
            Err(GrassmannError::AlgebraMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.ensure_same(other)?;
        let mut e = self.clone();
        for (m, v) in &other.terms {
            e.accumulate(m.clone(), *v);
        }
        Ok(e)
    }

    /// Distributive product with each pair of monomials brought to canonical order.
    pub fn multiply(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.ensure_same(other)?;
        let mut e = Self::zero(&self.algebra);
        let mut word = Vec::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                word.clear();
                word.extend_from_slice(&ma.0);
                word.extend_from_slice(&mb.0);
                if let Some((mono, sign)) = canonical_order(&word) {
                    e.accumulate(mono, ca * cb * sign);
                }
            }
        }
        Ok(e)
    }

    /// Right derivative: move `g` to the far right of each monomial, then delete it.
    pub fn right_derivative(&self, g: &Generator) -> Self {
        let mut e = Self::zero(&self.algebra);
        for (m, c) in &self.terms {
            if let Ok(pos) = m.0.binary_search(g) {
                let passes = m.0[pos + 1..].iter().filter(|h| h.family == g.family).count();
                let sign = if passes % 2 == 0 { 1.0 } else { -1.0 };
                let mut rest = m.0.clone();
                rest.remove(pos);
                e.accumulate(Monomial(rest), c * sign);
            }
        }
        e
    }

    /// The `*` involution: generators fixed, coefficients conjugated, order reversed.
    pub fn star(&self) -> Self {
        let mut e = Self::zero(&self.algebra);
        for (m, c) in &self.terms {
            e.accumulate(m.clone(), c.conj() * m.reversal_sign());
        }
        e
    }

    pub fn is_star_real(&self, tol: f64) -> bool {
        self.approx_eq(&self.star(), tol)
    }

    /// Replaces every coordinate generator (merged position `k`) by `images[k]`.
    /// Elements containing momenta are rejected.
    pub fn substitute(&self, images: &[GrassmannElement]) -> Result<Self, GrassmannError> {
        let n = self.algebra.num_coordinates();
        if images.len() != n {
            return Err(GrassmannError::DimensionMismatch {
                expected: n,
                found: images.len(),
            });
        }
        if images.iter().any(|img| img.algebra != self.algebra) {
            return Err(GrassmannError::AlgebraMismatch);
        }
        let mut out = Self::zero(&self.algebra);
        for (m, c) in &self.terms {
            let mut prod = Self::scalar(&self.algebra, *c);
            for g in &m.0 {
                let pos = self
                    .algebra
                    .coordinate_position(g)
                    .ok_or_else(|| GrassmannError::UnknownGenerator(g.to_string()))?;
                prod = prod.multiply(&images[pos])?;
            }
            out = out.try_add(&prod)?;
        }
        Ok(out)
    }

    /// The `+` involution attached to a metric-like matrix `ρ`:
    /// `ζᵢ⁺ = ρ_{ki} ζ_k`, coefficients conjugated, order reversed.
    pub fn plus_involution(&self, rho: &CMatrix) -> Result<Self, GrassmannError> {
        let n = self.algebra.num_coordinates();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(GrassmannError::DimensionMismatch {
                expected: n,
                found: rho.nrows(),
            });
        }
        if self.has_momenta() {
            return Err(GrassmannError::UnknownGenerator("momenta are not transported".into()));
        }
        let images: Vec<GrassmannElement> = (0..n)
            .map(|i| {
                let col: Vec<Complex64> = (0..n).map(|k| rho[(k, i)]).collect();
                Self::linear(&self.algebra, &col)
            })
            .collect::<Result<_, _>>()?;
        let mut out = Self::zero(&self.algebra);
        for (m, c) in &self.terms {
            let mut prod = Self::scalar(&self.algebra, c.conj());
            for g in m.0.iter().rev() {
                let pos = self.algebra.coordinate_position(g).expect("coordinate");
                prod = prod.multiply(&images[pos])?;
            }
            out = out.try_add(&prod)?;
        }
        Ok(out)
    }

    pub fn is_plus_real(&self, rho: &CMatrix, tol: f64) -> Result<bool, GrassmannError> {
        Ok(self.approx_eq(&self.plus_involution(rho)?, tol))
    }

    /// Largest coefficient difference, treating missing monomials as zero.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for (m, c) in &self.terms {
            worst = worst.max((c - other.coefficient(m)).norm());
        }
        for (m, c) in &other.terms {
            if !self.terms.contains_key(m) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.algebra == other.algebra && self.distance(other) <= tol
    }

    /// Drops coefficients with modulus at most `tol`.
    pub fn chop(&self, tol: f64) -> Self {
        let mut e = self.clone();
        e.terms.retain(|_, c| c.norm() > tol);
        e
    }

    /// Graded Poisson bracket
    /// `{f,g} = Σ ∂f/∂xᵢ ∂g/∂pᵢ − ε(f,g) ∂g/∂xᵢ ∂f/∂pᵢ`,
    /// summed over every coordinate/momentum pair of every family.
    pub fn poisson(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.ensure_same(other)?;
        if !self.algebra.has_momenta() {
            return Err(GrassmannError::NoMomenta);
        }
        let gf = self.grading().ok_or(GrassmannError::IndefiniteParity)?;
        let gg = other.grading().ok_or(GrassmannError::IndefiniteParity)?;
        let eps = Complex64::new(gf.commutation_sign(&gg), 0.0);
        let mut out = Self::zero(&self.algebra);
        for x in self.algebra.coordinates() {
            let p = Generator::momentum(x.family, x.index);
            let first = self.right_derivative(&x).multiply(&other.right_derivative(&p))?;
            let second = other.right_derivative(&x).multiply(&self.right_derivative(&p))?;
            out = out.try_add(&first)?.try_add(&second.scale(-eps))?;
        }
        Ok(out)
    }

    /// Dirac bracket with respect to a set of second-class constraints whose
    /// mutual brackets are numbers.
    pub fn dirac(&self, other: &Self, constraints: &[GrassmannElement]) -> Result<Self, GrassmannError> {
        let cinv = constraint_inverse(constraints)?;
        let base = self.poisson(other)?;
        let left: Vec<Self> = constraints.iter().map(|phi| self.poisson(phi)).collect::<Result<_, _>>()?;
        let right: Vec<Self> = constraints.iter().map(|phi| phi.poisson(other)).collect::<Result<_, _>>()?;
        let mut correction = Self::zero(&self.algebra);
        for (i, li) in left.iter().enumerate() {
            if li.is_zero() {
                continue;
            }
            for (j, rj) in right.iter().enumerate() {
                let w = cinv[(i, j)];
                if w == Complex64::new(0.0, 0.0) || rj.is_zero() {
                    continue;
                }
                correction = correction.try_add(&li.multiply(rj)?.scale(w))?;
            }
        }
        base.try_add(&correction.scale(Complex64::new(-1.0, 0.0)))
    }
}

/// Inverse of the numeric matrix `C_ij = {φᵢ, φⱼ}`.
pub fn constraint_inverse(constraints: &[GrassmannElement]) -> Result<DMatrix<Complex64>, GrassmannError> {
    let m = constraints.len();
    let mut c = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let b = constraints[i].poisson(&constraints[j])?;
            c[(i, j)] = b
                .chop(COEFF_TOL)
                .as_scalar()
                .ok_or(GrassmannError::NonScalarConstraintBracket(i, j))?;
        }
    }
    c.try_inverse().ok_or(GrassmannError::SingularConstraints)
}

/// Free-spin second-class constraints `φᵢ = πᵢ − (i/2)ξᵢ` for every family,
/// stacked family by family.
pub fn spin_constraints(algebra: &AlgebraSpec) -> Result<Vec<GrassmannElement>, GrassmannError> {
    if !algebra.has_momenta() {
        return Err(GrassmannError::NoMomenta);
    }
    algebra
        .coordinates()
        .into_iter()
        .map(|x| {
            GrassmannElement::canonicalize(
                algebra,
                [
                    (vec![Generator::momentum(x.family, x.index)], Complex64::new(1.0, 0.0)),
                    (vec![x], Complex64::new(0.0, -0.5)),
                ],
            )
        })
        .collect()
}

/// Classical spin Hamiltonian `−(i/2) ε_ijk θᵢθⱼ B_k` on a 3-generator family.
pub fn precession_hamiltonian(
    algebra: &AlgebraSpec,
    family: usize,
    field: [Complex64; 3],
) -> Result<GrassmannElement, GrassmannError> {
    if algebra.family_sizes().get(family) != Some(&3) {
        return Err(GrassmannError::InvalidAlgebra(format!("family {family} must have three generators")));
    }
    let mut raw = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let e = levi_civita(i, j, k);
                if e != 0.0 {
                    raw.push((
                        vec![Generator::coord(family, i), Generator::coord(family, j)],
                        Complex64::new(0.0, -0.5) * field[k] * e,
                    ));
                }
            }
        }
    }
    GrassmannElement::canonicalize(algebra, raw)
}

/// Coupling `(1/2) J_ij ξᵢχⱼ` between families 0 and 1 of a `[3,3]` algebra.
pub fn coupling_term(algebra: &AlgebraSpec, j: &[[f64; 3]; 3]) -> Result<GrassmannElement, GrassmannError> {
    if algebra.family_sizes().len() < 2 || algebra.family_sizes()[0] != 3 || algebra.family_sizes()[1] != 3 {
        return Err(GrassmannError::InvalidAlgebra("coupling needs two families of three".into()));
    }
    let raw = (0..3).flat_map(|a| {
        (0..3).map(move |b| {
            (
                vec![Generator::coord(0, a), Generator::coord(1, b)],
                Complex64::new(0.5 * j[a][b], 0.0),
            )
        })
    });
    GrassmannElement::canonicalize(algebra, raw)
}

pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

impl fmt::Display for GrassmannElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| format!("({}{:+}i)·{}", c.re, c.im, m))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &GrassmannElement {
    type Output = GrassmannElement;

    /// Panics if the operands live in different algebras.
    fn add(self, rhs: Self) -> GrassmannElement {
        self.try_add(rhs).expect("algebra mismatch in addition")
    }
}

impl Sub for &GrassmannElement {
    type Output = GrassmannElement;

    fn sub(self, rhs: Self) -> GrassmannElement {
        self.try_add(&rhs.scale(Complex64::new(-1.0, 0.0)))
            .expect("algebra mismatch in subtraction")
    }
}

impl Mul for &GrassmannElement {
    type Output = GrassmannElement;

    fn mul(self, rhs: Self) -> GrassmannElement {
        self.multiply(rhs).expect("algebra mismatch in product")
    }
}

impl Mul<Complex64> for &GrassmannElement {
    type Output = GrassmannElement;

    fn mul(self, rhs: Complex64) -> GrassmannElement {
        self.scale(rhs)
    }
}

impl Neg for &GrassmannElement {
    type Output = GrassmannElement;

    fn neg(self) -> GrassmannElement {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

// ---------------------------------------------------------------------------
// JSON document form

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraDocument {
    pub families: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub momenta: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermDocument {
    pub mono: Vec<String>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementDocument {
    pub algebra: AlgebraDocument,
    pub terms: Vec<TermDocument>,
}

impl From<&AlgebraSpec> for AlgebraDocument {
    fn from(a: &AlgebraSpec) -> Self {
        AlgebraDocument {
            families: a.family_sizes.clone(),
            momenta: a.momenta,
        }
    }
}

impl TryFrom<&AlgebraDocument> for AlgebraSpec {
    type Error = GrassmannError;

    fn try_from(d: &AlgebraDocument) -> Result<Self, Self::Error> {
        AlgebraSpec::new(d.families.clone(), d.momenta)
    }
}

impl GrassmannElement {
    pub fn to_document(&self) -> ElementDocument {
        ElementDocument {
            algebra: (&self.algebra).into(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermDocument {
                    mono: m.0.iter().map(|g| g.to_string()).collect(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }

    /// Strict reader: monomials must already be canonical and appear once.
    pub fn from_document(doc: &ElementDocument) -> Result<Self, GrassmannError> {
        let algebra = AlgebraSpec::try_from(&doc.algebra)?;
        let mut e = Self::zero(&algebra);
        for t in &doc.terms {
            let gens: Vec<Generator> = t.mono.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
            for g in &gens {
                algebra.check(g)?;
            }
            let mono = Monomial::from_canonical(gens)?;
            if e.terms.contains_key(&mono) {
                return Err(GrassmannError::DuplicateMonomial(mono.to_string()));
            }
            if !t.re.is_finite() || !t.im.is_finite() {
                return Err(GrassmannError::Json(format!("non-finite coefficient on {mono}")));
            }
            e.accumulate(mono, Complex64::new(t.re, t.im));
        }
        Ok(e)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("element documents always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, GrassmannError> {
        let doc: ElementDocument = serde_json::from_str(s).map_err(|e| GrassmannError::Json(e.to_string()))?;
        Self::from_document(&doc)
    }
}
