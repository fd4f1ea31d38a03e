//! Free graded-commutative polynomial algebra on a graded coordinate system,
//! with super-derivations, vector fields, polyvector fields and the
//! Lie/Schouten brackets.
//!
//! Conventions fixed here and used everywhere else:
//! * monomials are stored in coordinate declaration order; all Koszul signs
//!   are resolved at insertion time;
//! * partial derivatives act from the left: `d/dc` picks up the sign
//!   (-1)^(number of odd coordinates preceding `c` in the monomial);
//! * the right derivative is `d_R f/dc = (-1)^(par(c)*(par(f)+1)) d_L f/dc`;
//! * the Schouten bracket is the canonical odd bracket on the doubled
//!   coordinate system, `[p,q] = sum_a d_R p/d theta_a * d_L q/d x_a
//!   - d_R p/d x_a * d_L q/d theta_a`; restricted to vector fields it is the
//!   graded commutator, and `[v, f] = v(f)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactla::Rational;

/// Ordered graded coordinate system. A coordinate of odd parity squares to
/// zero in the algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateSystem {
    coords: Vec<(String, i64)>,
}

impl CoordinateSystem {
    pub fn new(coords: Vec<(String, i64)>) -> Arc<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (name, _) in &coords {
            assert!(seen.insert(name.clone()), "duplicate coordinate `{name}`");
        }
        Arc::new(CoordinateSystem { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.coords[i].0
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.coords[i].1
    }

    pub fn parity(&self, i: usize) -> u8 {
        self.coords[i].1.rem_euclid(2) as u8
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|(n, _)| n == name)
    }
}

pub type Monomial = Vec<u32>;

/// Element of the free graded-commutative algebra on a coordinate system.
/// No zero coefficients are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperPolynomial {
    sys: Arc<CoordinateSystem>,
    terms: BTreeMap<Monomial, Rational>,
}

fn monomial_degree(sys: &CoordinateSystem, m: &[u32]) -> i64 {
    m.iter()
        .enumerate()
        .map(|(i, &e)| e as i64 * sys.degree(i))
        .sum()
}

fn monomial_parity(sys: &CoordinateSystem, m: &[u32]) -> u8 {
    (m.iter()
        .enumerate()
        .map(|(i, &e)| e as u64 * sys.parity(i) as u64)
        .sum::<u64>()
        % 2) as u8
}

/// Merge two canonical monomials; returns the product monomial and the Koszul
/// sign, or None when an odd coordinate squares.
fn mul_monomials(sys: &CoordinateSystem, a: &[u32], b: &[u32]) -> Option<(Monomial, i32)> {
    let n = sys.len();
    let mut out = vec![0u32; n];
    let mut swaps: u64 = 0;
    // Odd generators of `b` move left past the odd generators of `a` with a
    // larger coordinate index.
    let mut odd_tail: u64 = 0; // odd exponents of `a` with index > j, built backwards
    let mut tail = vec![0u64; n + 1];
    for j in (0..n).rev() {
        tail[j] = odd_tail;
        if sys.parity(j) == 1 {
            odd_tail += a[j] as u64;
        }
    }
    for j in 0..n {
        if sys.parity(j) == 1 {
            debug_assert!(a[j] <= 1 && b[j] <= 1, "odd exponent out of range");
            if a[j] + b[j] > 1 {
                return None;
            }
            if b[j] == 1 {
                swaps += tail[j];
            }
        }
        out[j] = a[j] + b[j];
    }
    let sign = if swaps % 2 == 0 { 1 } else { -1 };
    Some((out, sign))
}

impl SuperPolynomial {
    pub fn zero(sys: &Arc<CoordinateSystem>) -> Self {
        SuperPolynomial {
            sys: Arc::clone(sys),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(sys: &Arc<CoordinateSystem>, c: Rational) -> Self {
        let mut p = Self::zero(sys);
        p.add_term(vec![0; sys.len()], c);
        p
    }

    pub fn one(sys: &Arc<CoordinateSystem>) -> Self {
        Self::constant(sys, Rational::one())
    }

    pub fn var(sys: &Arc<CoordinateSystem>, i: usize) -> Self {
        let mut m = vec![0; sys.len()];
        m[i] = 1;
        let mut p = Self::zero(sys);
        p.add_term(m, Rational::one());
        p
    }

    pub fn monomial(sys: &Arc<CoordinateSystem>, exps: Monomial, coef: Rational) -> Self {
        assert_eq!(exps.len(), sys.len());
        for (i, &e) in exps.iter().enumerate() {
            assert!(sys.parity(i) == 0 || e <= 1, "odd coordinate squared");
        }
        let mut p = Self::zero(sys);
        p.add_term(exps, coef);
        p
    }

    pub fn system(&self) -> &Arc<CoordinateSystem> {
        &self.sys
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &[u32]) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Constant term.
    pub fn constant_term(&self) -> Rational {
        self.coefficient(&vec![0; self.sys.len()])
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn same_system(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.sys, &other.sys) || self.sys == other.sys {
            Ok(())
        } else {
            Err(Error::CoordinateMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_system(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(&self.sys);
        }
        SuperPolynomial {
            sys: Arc::clone(&self.sys),
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    /// Graded-commutative product with Koszul signs.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.same_system(other)?;
        let mut out = Self::zero(&self.sys);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some((m, sign)) = mul_monomials(&self.sys, ma, mb) {
                    let mut c = ca * cb;
                    if sign < 0 {
                        c = -c;
                    }
                    out.add_term(m, c);
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut out = Self::one(&self.sys);
        for _ in 0..k {
            out = out.multiply(self)?;
        }
        Ok(out)
    }

    /// Left super-derivative with respect to the coordinate of index `c`.
    pub fn partial_left_idx(&self, c: usize) -> Self {
        assert!(c < self.sys.len());
        let mut out = Self::zero(&self.sys);
        for (m, coef) in &self.terms {
            if m[c] == 0 {
                continue;
            }
            let mut nm = m.clone();
            let mut nc = coef.clone();
            if self.sys.parity(c) == 0 {
                nc *= Rational::from(num::BigInt::from(m[c]));
                nm[c] -= 1;
            } else {
                let preceding_odd: u64 = (0..c)
                    .filter(|&i| self.sys.parity(i) == 1)
                    .map(|i| m[i] as u64)
                    .sum();
                if preceding_odd % 2 == 1 {
                    nc = -nc;
                }
                nm[c] = 0;
            }
            out.add_term(nm, nc);
        }
        out
    }

    /// Right super-derivative; differs from the left one by the parity of the
    /// term when the coordinate is odd.
    pub fn partial_right_idx(&self, c: usize) -> Self {
        if self.sys.parity(c) == 0 {
            return self.partial_left_idx(c);
        }
        let mut out = Self::zero(&self.sys);
        for (m, coef) in &self.terms {
            if m[c] == 0 {
                continue;
            }
            let single = SuperPolynomial {
                sys: Arc::clone(&self.sys),
                terms: BTreeMap::from([(m.clone(), coef.clone())]),
            };
            let mut d = single.partial_left_idx(c);
            if monomial_parity(&self.sys, m) == 0 {
                // par(c)*(par(m)+1) odd
                d = d.neg();
            }
            for (nm, nc) in d.terms {
                out.add_term(nm, nc);
            }
        }
        out
    }

    pub fn partial_left(&self, coord: &str) -> Result<Self> {
        let c = self
            .sys
            .index_of(coord)
            .ok_or_else(|| Error::UnknownCoordinate(coord.to_string()))?;
        Ok(self.partial_left_idx(c))
    }

    /// Total degree of each monomial; None for 0, Some(d) when homogeneous.
    pub fn homogeneous_degree(&self) -> Option<i64> {
        let mut deg = None;
        for m in self.terms.keys() {
            let d = monomial_degree(&self.sys, m);
            match deg {
                None => deg = Some(d),
                Some(e) if e == d => {}
                _ => return None,
            }
        }
        deg
    }

    /// Parity when all terms share it.
    pub fn homogeneous_parity(&self) -> Option<u8> {
        let mut par = None;
        for m in self.terms.keys() {
            let p = monomial_parity(&self.sys, m);
            match par {
                None => par = Some(p),
                Some(q) if q == p => {}
                _ => return None,
            }
        }
        par
    }

    /// Component of total degree `d`.
    pub fn degree_component(&self, d: i64) -> Self {
        SuperPolynomial {
            sys: Arc::clone(&self.sys),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| monomial_degree(&self.sys, m) == d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Component whose total exponent sum (polynomial degree) is `d`.
    pub fn poly_degree_component(&self, d: u32) -> Self {
        SuperPolynomial {
            sys: Arc::clone(&self.sys),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.iter().sum::<u32>() == d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn max_poly_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Drop all terms of polynomial degree above `cap`.
    pub fn truncate_poly_degree(&self, cap: u32) -> Self {
        SuperPolynomial {
            sys: Arc::clone(&self.sys),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.iter().sum::<u32>() <= cap)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn monomial_degree_of(&self, m: &[u32]) -> i64 {
        monomial_degree(&self.sys, m)
    }

    pub fn monomial_parity_of(&self, m: &[u32]) -> u8 {
        monomial_parity(&self.sys, m)
    }
}

impl fmt::Display for SuperPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut terms: Vec<(&Monomial, &Rational)> = self.terms.iter().collect();
        terms.sort_by_key(|(m, _)| (monomial_degree(&self.sys, m), (*m).clone()));
        let mut first = true;
        for (m, c) in terms {
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut factors: Vec<String> = Vec::new();
            if !abs.is_one() || m.iter().all(|&e| e == 0) {
                factors.push(abs.to_string());
            }
            for (i, &e) in m.iter().enumerate() {
                if e == 1 {
                    factors.push(self.sys.name(i).to_string());
                } else if e > 1 {
                    factors.push(format!("{}^{}", self.sys.name(i), e));
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// Vector field with homogeneous components, stored as coordinate components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorField {
    sys: Arc<CoordinateSystem>,
    components: BTreeMap<usize, SuperPolynomial>,
}

impl VectorField {
    pub fn zero(sys: &Arc<CoordinateSystem>) -> Self {
        VectorField {
            sys: Arc::clone(sys),
            components: BTreeMap::new(),
        }
    }

    pub fn new(sys: &Arc<CoordinateSystem>, components: BTreeMap<usize, SuperPolynomial>) -> Self {
        let components: BTreeMap<usize, SuperPolynomial> = components
            .into_iter()
            .filter(|(_, p)| !p.is_zero())
            .collect();
        for p in components.values() {
            assert!(
                Arc::ptr_eq(p.system(), sys) || **p.system() == **sys,
                "component over a different coordinate system"
            );
        }
        VectorField {
            sys: Arc::clone(sys),
            components,
        }
    }

    pub fn system(&self) -> &Arc<CoordinateSystem> {
        &self.sys
    }

    pub fn component(&self, i: usize) -> SuperPolynomial {
        self.components
            .get(&i)
            .cloned()
            .unwrap_or_else(|| SuperPolynomial::zero(&self.sys))
    }

    pub fn components(&self) -> impl Iterator<Item = (usize, &SuperPolynomial)> {
        self.components.iter().map(|(&i, p)| (i, p))
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut components = self.components.clone();
        for (&i, p) in &other.components {
            let cur = components
                .remove(&i)
                .unwrap_or_else(|| SuperPolynomial::zero(&self.sys));
            let s = cur.add(p)?;
            if !s.is_zero() {
                components.insert(i, s);
            }
        }
        Ok(VectorField {
            sys: Arc::clone(&self.sys),
            components,
        })
    }

    pub fn neg(&self) -> Self {
        VectorField {
            sys: Arc::clone(&self.sys),
            components: self.components.iter().map(|(&i, p)| (i, p.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        VectorField {
            sys: Arc::clone(&self.sys),
            components: self
                .components
                .iter()
                .map(|(&i, p)| (i, p.scale(c)))
                .filter(|(_, p)| !p.is_zero())
                .collect(),
        }
    }

    /// Parity of the derivation v^k d/dx_k: |v^k| + par(x_k), required to be
    /// the same for all components.
    pub fn parity(&self) -> Option<u8> {
        let mut par = None;
        for (&i, p) in &self.components {
            let cp = p.homogeneous_parity()?;
            let vp = (cp + self.sys.parity(i)) % 2;
            match par {
                None => par = Some(vp),
                Some(q) if q == vp => {}
                _ => return None,
            }
        }
        par
    }

    /// Cohomological degree of the derivation: deg(v^k) - deg(x_k).
    pub fn degree(&self) -> Option<i64> {
        let mut deg = None;
        for (&i, p) in &self.components {
            let d = p.homogeneous_degree()? - self.sys.degree(i);
            match deg {
                None => deg = Some(d),
                Some(e) if e == d => {}
                _ => return None,
            }
        }
        deg
    }

    /// Apply as a derivation: v(f) = sum_k v^k * d_L f/dx_k.
    pub fn apply(&self, f: &SuperPolynomial) -> Result<SuperPolynomial> {
        let mut out = SuperPolynomial::zero(&self.sys);
        for (&i, vk) in &self.components {
            let df = f.partial_left_idx(i);
            out = out.add(&vk.multiply(&df)?)?;
        }
        Ok(out)
    }

    /// Graded commutator [v,w] = v w - (-1)^{|v||w|} w v as derivations.
    pub fn lie_bracket(&self, other: &Self) -> Result<Self> {
        if !(Arc::ptr_eq(&self.sys, &other.sys) || *self.sys == *other.sys) {
            return Err(Error::CoordinateMismatch);
        }
        if self.is_zero() || other.is_zero() {
            return Ok(VectorField::zero(&self.sys));
        }
        let pv = self.parity().expect("lie_bracket needs homogeneous parity");
        let pw = other.parity().unwrap_or(0);
        let sign_flip = pv == 1 && pw == 1;
        let mut components = BTreeMap::new();
        for k in 0..self.sys.len() {
            let a = self.apply(&other.component(k))?;
            let b = other.apply(&self.component(k))?;
            let b = if sign_flip { b } else { b.neg() };
            let c = a.add(&b)?;
            if !c.is_zero() {
                components.insert(k, c);
            }
        }
        Ok(VectorField {
            sys: Arc::clone(&self.sys),
            components,
        })
    }
}

/// The doubled coordinate system (x_i, theta_i) underlying polyvector fields;
/// theta_i stands for d/dx_i and has degree 1 - deg(x_i).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyContext {
    base: Arc<CoordinateSystem>,
    full: Arc<CoordinateSystem>,
}

impl PolyContext {
    pub fn new(base: &Arc<CoordinateSystem>) -> Self {
        let mut coords: Vec<(String, i64)> = base
            .coords
            .iter()
            .map(|(n, d)| (n.clone(), *d))
            .collect();
        for (n, d) in &base.coords {
            coords.push((format!("d_{n}"), 1 - d));
        }
        PolyContext {
            base: Arc::clone(base),
            full: CoordinateSystem::new(coords),
        }
    }

    pub fn base(&self) -> &Arc<CoordinateSystem> {
        &self.base
    }

    pub fn full(&self) -> &Arc<CoordinateSystem> {
        &self.full
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn theta(&self, i: usize) -> usize {
        self.base.len() + i
    }

    /// Lift a polynomial on the base coordinates to the doubled system.
    pub fn lift(&self, p: &SuperPolynomial) -> PolyVector {
        assert!(**p.system() == *self.base, "not a base polynomial");
        let mut out = SuperPolynomial::zero(&self.full);
        for (m, c) in p.terms() {
            let mut exps = m.clone();
            exps.resize(self.full.len(), 0);
            out.add_term(exps, c.clone());
        }
        PolyVector {
            ctx: self.clone(),
            poly: out,
        }
    }

    /// A polyvector whose only term is theta_i.
    pub fn theta_var(&self, i: usize) -> PolyVector {
        PolyVector {
            ctx: self.clone(),
            poly: SuperPolynomial::var(&self.full, self.theta(i)),
        }
    }

    pub fn from_vector_field(&self, v: &VectorField) -> PolyVector {
        let mut out = PolyVector::zero(self);
        for (i, vk) in v.components() {
            let term = self
                .lift(vk)
                .wedge(&self.theta_var(i))
                .expect("same context");
            out = out.add(&term).expect("same context");
        }
        out
    }
}

/// Polyvector field, stored as a polynomial on the doubled system. The
/// multiplicity of a term is its total theta-exponent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyVector {
    ctx: PolyContext,
    poly: SuperPolynomial,
}

impl PolyVector {
    pub fn zero(ctx: &PolyContext) -> Self {
        PolyVector {
            ctx: ctx.clone(),
            poly: SuperPolynomial::zero(&ctx.full),
        }
    }

    pub fn from_poly(ctx: &PolyContext, poly: SuperPolynomial) -> Self {
        assert!(**poly.system() == *ctx.full, "not over the doubled system");
        PolyVector {
            ctx: ctx.clone(),
            poly,
        }
    }

    pub fn context(&self) -> &PolyContext {
        &self.ctx
    }

    pub fn poly(&self) -> &SuperPolynomial {
        &self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    fn same_context(&self, other: &Self) -> Result<()> {
        if self.ctx == other.ctx {
            Ok(())
        } else {
            Err(Error::CoordinateMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_context(other)?;
        Ok(PolyVector {
            ctx: self.ctx.clone(),
            poly: self.poly.add(&other.poly)?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        PolyVector {
            ctx: self.ctx.clone(),
            poly: self.poly.neg(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        PolyVector {
            ctx: self.ctx.clone(),
            poly: self.poly.scale(c),
        }
    }

    /// Wedge product (= graded-commutative product on the doubled system).
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.same_context(other)?;
        Ok(PolyVector {
            ctx: self.ctx.clone(),
            poly: self.poly.multiply(&other.poly)?,
        })
    }

    fn theta_weight(&self, m: &[u32]) -> u32 {
        let n = self.ctx.dim();
        m[n..].iter().sum()
    }

    /// Component of fixed multiplicity k (total theta-exponent k).
    pub fn multiplicity_component(&self, k: u32) -> Self {
        let terms = self
            .poly
            .terms()
            .filter(|(m, _)| self.theta_weight(m) == k)
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        PolyVector {
            ctx: self.ctx.clone(),
            poly: SuperPolynomial {
                sys: Arc::clone(&self.ctx.full),
                terms,
            },
        }
    }

    pub fn max_multiplicity(&self) -> u32 {
        self.poly
            .terms()
            .map(|(m, _)| self.theta_weight(m))
            .max()
            .unwrap_or(0)
    }

    /// Pure multiplicity-1 polyvectors convert back to vector fields.
    pub fn to_vector_field(&self) -> Option<VectorField> {
        let n = self.ctx.dim();
        let mut components: BTreeMap<usize, SuperPolynomial> = BTreeMap::new();
        for (m, c) in self.poly.terms() {
            if self.theta_weight(m) != 1 {
                return None;
            }
            let k = (n..2 * n).find(|&j| m[j] > 0).unwrap() - n;
            // Strip the trailing theta_k; it is the rightmost factor of the
            // canonical monomial, so the right derivative carries no sign.
            let mut base_m: Vec<u32> = m[..n].to_vec();
            if m[n..].iter().any(|&e| e > 1) {
                return None;
            }
            base_m.truncate(n);
            let entry = components
                .entry(k)
                .or_insert_with(|| SuperPolynomial::zero(&self.ctx.base));
            let mut single = SuperPolynomial::zero(&self.ctx.base);
            single.add_term(base_m, c.clone());
            *entry = entry.add(&single).ok()?;
        }
        components.retain(|_, p| !p.is_zero());
        Some(VectorField {
            sys: Arc::clone(&self.ctx.base),
            components,
        })
    }

    /// The Schouten-Nijenhuis bracket, as the canonical odd bracket on the
    /// doubled system.
    pub fn schouten_bracket(&self, other: &Self) -> Result<Self> {
        self.same_context(other)?;
        let n = self.ctx.dim();
        let mut out = SuperPolynomial::zero(&self.ctx.full);
        for a in 0..n {
            let x = a;
            let th = self.ctx.theta(a);
            let t1 = self
                .poly
                .partial_right_idx(th)
                .multiply(&other.poly.partial_left_idx(x))?;
            let t2 = self
                .poly
                .partial_right_idx(x)
                .multiply(&other.poly.partial_left_idx(th))?;
            out = out.add(&t1)?.sub(&t2)?;
        }
        Ok(PolyVector {
            ctx: self.ctx.clone(),
            poly: out,
        })
    }
}

impl fmt::Display for PolyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.poly)
    }
}

/// Deterministic test-sample generator (small xorshift; no external RNG).
pub mod sampling {
    use super::*;

    pub struct Rng(u64);

    impl Rng {
        pub fn new(seed: u64) -> Self {
            Rng(seed.max(1))
        }

        pub fn next_u64(&mut self) -> u64 {
            let mut x = self.0;
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            self.0 = x;
            x
        }

        pub fn below(&mut self, n: u64) -> u64 {
            self.next_u64() % n
        }

        pub fn coef(&mut self) -> Rational {
            let n = (self.below(9) as i64) - 4;
            crate::exactla::rat_int(n)
        }
    }

    /// Random polynomial over `sys` with exponents bounded by `max_exp` on
    /// even coordinates and at most `max_terms` monomials.
    pub fn random_poly(
        sys: &Arc<CoordinateSystem>,
        max_exp: u32,
        max_terms: usize,
        rng: &mut Rng,
    ) -> SuperPolynomial {
        let mut p = SuperPolynomial::zero(sys);
        for _ in 0..max_terms {
            let mut m = vec![0u32; sys.len()];
            for (i, e) in m.iter_mut().enumerate() {
                *e = if sys.parity(i) == 1 {
                    rng.below(2) as u32
                } else {
                    rng.below(max_exp as u64 + 1) as u32
                };
            }
            p.add_term(m, rng.coef());
        }
        p
    }

    /// Random polyvector of multiplicity exactly `mult`.
    pub fn random_polyvector(
        ctx: &PolyContext,
        mult: u32,
        max_exp: u32,
        max_terms: usize,
        rng: &mut Rng,
    ) -> PolyVector {
        let n = ctx.dim();
        let mut p = SuperPolynomial::zero(ctx.full());
        for _ in 0..max_terms {
            let mut m = vec![0u32; 2 * n];
            for i in 0..n {
                m[i] = if ctx.full().parity(i) == 1 {
                    rng.below(2) as u32
                } else {
                    rng.below(max_exp as u64 + 1) as u32
                };
            }
            // distribute `mult` theta-exponents
            let mut placed = 0u32;
            let mut guard = 0;
            while placed < mult && guard < 200 {
                guard += 1;
                let j = n + rng.below(n as u64) as usize;
                if ctx.full().parity(j) == 1 {
                    if m[j] == 0 {
                        m[j] = 1;
                        placed += 1;
                    }
                } else {
                    m[j] += 1;
                    placed += 1;
                }
            }
            if placed == mult {
                p.add_term(m, rng.coef());
            }
        }
        PolyVector::from_poly(ctx, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::{rat, rat_int};

    fn odd3() -> Arc<CoordinateSystem> {
        CoordinateSystem::new(vec![
            ("xi1".into(), 1),
            ("xi2".into(), 1),
            ("xi3".into(), 1),
        ])
    }

    fn mixed() -> Arc<CoordinateSystem> {
        CoordinateSystem::new(vec![("x".into(), 0), ("xi1".into(), 1), ("xi2".into(), 1)])
    }

    #[test]
    fn odd_square_is_zero() {
        let sys = odd3();
        let xi1 = SuperPolynomial::var(&sys, 0);
        assert!(xi1.multiply(&xi1).unwrap().is_zero());
    }

    #[test]
    fn koszul_sign_on_odd_swap() {
        let sys = odd3();
        let xi1 = SuperPolynomial::var(&sys, 0);
        let xi2 = SuperPolynomial::var(&sys, 1);
        let a = xi1.multiply(&xi2).unwrap();
        let b = xi2.multiply(&xi1).unwrap();
        assert_eq!(a, b.neg());
    }

    #[test]
    fn mixed_product_hand_expansion() {
        // (x + xi1 xi2) * x = x^2 + x xi1 xi2
        let sys = mixed();
        let x = SuperPolynomial::var(&sys, 0);
        let xi1 = SuperPolynomial::var(&sys, 1);
        let xi2 = SuperPolynomial::var(&sys, 2);
        let p = x.add(&xi1.multiply(&xi2).unwrap()).unwrap();
        let prod = p.multiply(&x).unwrap();
        let expected = x
            .multiply(&x)
            .unwrap()
            .add(&x.multiply(&xi1).unwrap().multiply(&xi2).unwrap())
            .unwrap();
        assert_eq!(prod, expected);
    }

    #[test]
    fn partial_basics() {
        let sys = mixed();
        let xi1 = SuperPolynomial::var(&sys, 1);
        let d = xi1.partial_left("xi1").unwrap();
        assert_eq!(d, SuperPolynomial::one(&sys));
        let c = SuperPolynomial::constant(&sys, rat(3, 2));
        assert!(c.partial_left("xi1").unwrap().is_zero());
    }

    #[test]
    fn partial_left_convention() {
        // d_L/d_xi1 (xi2 xi1) = -xi2: one odd coordinate precedes xi1 in the
        // canonical writing xi1*xi2 => the stored monomial is xi1 xi2 with a
        // sign; go through the raw product to pin the value.
        let sys = odd3();
        let xi1 = SuperPolynomial::var(&sys, 0);
        let xi2 = SuperPolynomial::var(&sys, 1);
        let p = xi2.multiply(&xi1).unwrap(); // = -xi1 xi2
        let d = p.partial_left("xi1").unwrap();
        assert_eq!(d, xi2.neg());
    }

    #[test]
    fn double_partial_anticommutes() {
        let sys = odd3();
        let mut rng = sampling::Rng::new(7);
        for _ in 0..50 {
            let p = sampling::random_poly(&sys, 1, 6, &mut rng);
            let ab = p.partial_left_idx(0).partial_left_idx(1);
            let ba = p.partial_left_idx(1).partial_left_idx(0);
            assert_eq!(ab, ba.neg());
        }
    }

    #[test]
    fn graded_commutativity_random() {
        let sys = mixed();
        let mut rng = sampling::Rng::new(11);
        for _ in 0..200 {
            let mut p = SuperPolynomial::zero(&sys);
            let mut q = SuperPolynomial::zero(&sys);
            // homogeneous-parity samples
            let m1 = vec![rng.below(3) as u32, rng.below(2) as u32, 0];
            let m2 = vec![rng.below(3) as u32, 0, rng.below(2) as u32];
            p.add_term(m1.clone(), rng.coef());
            q.add_term(m2.clone(), rng.coef());
            let pq = p.multiply(&q).unwrap();
            let qp = q.multiply(&p).unwrap();
            let sp = p.homogeneous_parity().unwrap_or(0);
            let sq = q.homogeneous_parity().unwrap_or(0);
            let expect = if sp == 1 && sq == 1 { qp.neg() } else { qp };
            assert_eq!(pq, expect);
        }
    }

    #[test]
    fn leibniz_rule_random() {
        let sys = mixed();
        let mut rng = sampling::Rng::new(23);
        for _ in 0..100 {
            // homogeneous p
            let mut p = SuperPolynomial::zero(&sys);
            let mp = vec![rng.below(3) as u32, rng.below(2) as u32, rng.below(2) as u32];
            p.add_term(mp.clone(), rng.coef());
            let q = sampling::random_poly(&sys, 2, 4, &mut rng);
            for c in 0..sys.len() {
                let lhs = p.multiply(&q).unwrap().partial_left_idx(c);
                let dp = p.partial_left_idx(c);
                let dq = q.partial_left_idx(c);
                let mut second = p.multiply(&dq).unwrap();
                // sign: (-1)^{par(c) * par(p)}
                if sys.parity(c) == 1 && p.homogeneous_parity() == Some(1) {
                    second = second.neg();
                }
                let rhs = dp.multiply(&q).unwrap().add(&second).unwrap();
                assert_eq!(lhs, rhs, "Leibniz fails for coord {c}");
            }
        }
    }

    #[test]
    fn classical_commutator() {
        // [d/dx, x d/dx] = d/dx
        let sys = CoordinateSystem::new(vec![("x".into(), 0)]);
        let x = SuperPolynomial::var(&sys, 0);
        let v = VectorField::new(&sys, BTreeMap::from([(0, SuperPolynomial::one(&sys))]));
        let w = VectorField::new(&sys, BTreeMap::from([(0, x)]));
        let b = v.lie_bracket(&w).unwrap();
        assert_eq!(b, v);
    }

    #[test]
    fn odd_field_self_bracket() {
        // v = xi1 xi2 d/dxi3 squares to zero as an operator; [v,v] = 0.
        let sys = odd3();
        let xi1 = SuperPolynomial::var(&sys, 0);
        let xi2 = SuperPolynomial::var(&sys, 1);
        let v = VectorField::new(
            &sys,
            BTreeMap::from([(2, xi1.multiply(&xi2).unwrap())]),
        );
        assert_eq!(v.parity(), Some(1));
        let b = v.lie_bracket(&v).unwrap();
        assert!(b.is_zero());
    }

    #[test]
    fn schouten_vector_on_function() {
        // [v, f] = v(f)
        let sys = mixed();
        let ctx = PolyContext::new(&sys);
        let mut rng = sampling::Rng::new(5);
        for _ in 0..30 {
            let f = sampling::random_poly(&sys, 3, 4, &mut rng);
            let comp = sampling::random_poly(&sys, 2, 3, &mut rng);
            let v = VectorField::new(&sys, BTreeMap::from([(0, comp)]));
            let pv = ctx.from_vector_field(&v);
            let pf = ctx.lift(&f);
            let br = pv.schouten_bracket(&pf).unwrap();
            let expected = ctx.lift(&v.apply(&f).unwrap());
            assert_eq!(br, expected);
        }
    }

    #[test]
    fn schouten_functions_commute() {
        let sys = mixed();
        let ctx = PolyContext::new(&sys);
        let mut rng = sampling::Rng::new(17);
        let f = ctx.lift(&sampling::random_poly(&sys, 3, 4, &mut rng));
        let g = ctx.lift(&sampling::random_poly(&sys, 3, 4, &mut rng));
        assert!(f.schouten_bracket(&g).unwrap().is_zero());
    }

    #[test]
    fn schouten_matches_lie_bracket() {
        let sys = mixed();
        let ctx = PolyContext::new(&sys);
        let mut rng = sampling::Rng::new(31);
        for _ in 0..40 {
            // parity-homogeneous vector fields
            let mut cv = SuperPolynomial::zero(&sys);
            cv.add_term(vec![rng.below(3) as u32, 0, 0], rng.coef());
            let mut cw = SuperPolynomial::zero(&sys);
            cw.add_term(vec![rng.below(2) as u32, rng.below(2) as u32, 0], rng.coef());
            let v = VectorField::new(&sys, BTreeMap::from([(0, cv)]));
            let w = VectorField::new(&sys, BTreeMap::from([(1, cw)]));
            if v.parity().is_none() || w.parity().is_none() {
                continue;
            }
            let lie = v.lie_bracket(&w).unwrap();
            let sch = ctx
                .from_vector_field(&v)
                .schouten_bracket(&ctx.from_vector_field(&w))
                .unwrap();
            assert_eq!(sch, ctx.from_vector_field(&lie));
        }
    }

    #[test]
    fn schouten_biderivation_example() {
        // [d/dx /\ d/dy, x y] = x d/dx - y d/dy
        let sys = CoordinateSystem::new(vec![("x".into(), 0), ("y".into(), 0)]);
        let ctx = PolyContext::new(&sys);
        let tx = ctx.theta_var(0);
        let ty = ctx.theta_var(1);
        let p = tx.wedge(&ty).unwrap();
        let x = SuperPolynomial::var(&sys, 0);
        let y = SuperPolynomial::var(&sys, 1);
        let xy = ctx.lift(&x.multiply(&y).unwrap());
        let br = p.schouten_bracket(&xy).unwrap();
        let expect = ctx
            .lift(&x)
            .wedge(&tx)
            .unwrap()
            .sub(&ctx.lift(&y).wedge(&ty).unwrap())
            .unwrap();
        assert_eq!(br, expect);
    }

    #[test]
    fn schouten_graded_antisymmetry_and_jacobi() {
        // shifted-parity conventions: sign (-1)^{(p+1)(q+1)} with the
        // Grassmann parity of the polyvector as a polynomial.
        let sys = mixed();
        let ctx = PolyContext::new(&sys);
        let mut rng = sampling::Rng::new(41);
        let mut checked = 0;
        for _ in 0..400 {
            let a = sampling::random_polyvector(&ctx, rng.below(3) as u32, 2, 2, &mut rng);
            let b = sampling::random_polyvector(&ctx, rng.below(3) as u32, 2, 2, &mut rng);
            let c = sampling::random_polyvector(&ctx, rng.below(2) as u32, 2, 2, &mut rng);
            let (pa, pb, _pc) = match (
                a.poly().homogeneous_parity(),
                b.poly().homogeneous_parity(),
                c.poly().homogeneous_parity(),
            ) {
                (Some(x), Some(y), Some(z)) => (x, y, z),
                _ => continue,
            };
            checked += 1;
            // antisymmetry of the odd bracket: [a,b] = -(-1)^{(|a|+1)(|b|+1)} [b,a]
            let ab = a.schouten_bracket(&b).unwrap();
            let ba = b.schouten_bracket(&a).unwrap();
            let sign = (pa + 1) * (pb + 1) % 2;
            let expect = if sign == 1 { ba } else { ba.neg() };
            assert_eq!(ab, expect, "graded antisymmetry");
            // Jacobi: [a,[b,c]] = [[a,b],c] + (-1)^{(pa+1)(pb+1)} [b,[a,c]]
            let lhs = a.schouten_bracket(&b.schouten_bracket(&c).unwrap()).unwrap();
            let r1 = ab.schouten_bracket(&c).unwrap();
            let r2 = b.schouten_bracket(&a.schouten_bracket(&c).unwrap()).unwrap();
            let r2 = if (pa + 1) * (pb + 1) % 2 == 1 {
                r2.neg()
            } else {
                r2
            };
            assert_eq!(lhs, r1.add(&r2).unwrap(), "graded Jacobi");
            if checked > 60 {
                break;
            }
        }
        assert!(checked >= 20, "too few homogeneous samples");
    }

    #[test]
    fn rendering() {
        let sys = mixed();
        let x = SuperPolynomial::var(&sys, 0);
        let xi1 = SuperPolynomial::var(&sys, 1);
        let xi2 = SuperPolynomial::var(&sys, 2);
        let p = x
            .pow(2)
            .unwrap()
            .scale(&rat(3, 2))
            .multiply(&xi1)
            .unwrap()
            .multiply(&xi2)
            .unwrap();
        assert_eq!(p.to_string(), "3/2*x^2*xi1*xi2");
        assert_eq!(SuperPolynomial::zero(&sys).to_string(), "0");
        assert_eq!(
            SuperPolynomial::constant(&sys, rat_int(-1)).to_string(),
            "-1"
        );
    }
}
