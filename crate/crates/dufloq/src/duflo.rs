//! The strange automorphism exp(sum alpha_{2k} c_{2k}) of S(g) and the
//! verification that PBW symmetrization twisted by it is multiplicative on
//! invariants.

use num::{One, Zero};
use serde::Serialize;

use crate::exactla::{rat, rat_int, Rational};
use crate::liealg::{LieSuperAlgebraSpec, TraceElement};
use crate::superpoly::SuperPolynomial;
use crate::uea::{PBWElement, Uea};

/// Exact coefficients alpha_{2k} of the even series
/// (1/2) log((e^{x/2} - e^{-x/2}) / x) = sum_{k>=1} alpha_{2k} x^{2k}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaSeries {
    /// coeffs[k] = alpha_{2k}; coeffs[0] = 0.
    pub coeffs: Vec<Rational>,
}

impl AlphaSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn alpha(&self, two_k: usize) -> Rational {
        assert_eq!(two_k % 2, 0);
        self.coeffs
            .get(two_k / 2)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }
}

/// Truncated product of series in y = x^2.
fn series_mul(a: &[Rational], b: &[Rational], cap: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); cap + 1];
    for (i, ai) in a.iter().enumerate().take(cap + 1) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(cap + 1 - i) {
            if !bj.is_zero() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

/// Coefficients of sinh(x/2)/(x/2) as a series in y = x^2:
/// term m is 1 / (4^m (2m+1)!).
fn sinhc_half_series(cap: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(cap + 1);
    let mut denom = Rational::one(); // 4^m (2m+1)!
    out.push(Rational::one());
    for m in 1..=cap {
        let t = 4 * (2 * m) * (2 * m + 1);
        denom *= rat_int(t as i64);
        out.push(Rational::one() / &denom);
    }
    out
}

/// alpha_{2k} for k = 1..=order, by the formal-series logarithm.
pub fn alpha_coefficients(order: usize) -> AlphaSeries {
    assert!(order >= 1);
    let s = sinhc_half_series(order);
    // u = s - 1; log(1+u) = sum_{j>=1} (-1)^{j+1} u^j / j
    let mut u = s;
    u[0] = Rational::zero();
    let mut log = vec![Rational::zero(); order + 1];
    let mut upow = u.clone();
    for j in 1..=order {
        let sign = if j % 2 == 1 { 1 } else { -1 };
        let f = rat(sign, j as i64);
        for (i, c) in upow.iter().enumerate().take(order + 1) {
            if !c.is_zero() {
                log[i] += c * &f;
            }
        }
        if j < order {
            upow = series_mul(&upow, &u, order);
        }
    }
    let half = rat(1, 2);
    AlphaSeries {
        coeffs: log.into_iter().map(|c| c * &half).collect(),
    }
}

/// Apply c (an element of S^k(g*)) to p in S(g) as the constant-coefficient
/// differential operator replacing each dual coordinate by the corresponding
/// left partial derivative; derivatives within a monomial are composed from
/// the highest coordinate index down, so the lowest index acts last.
pub fn apply_trace_operator(c: &TraceElement, p: &SuperPolynomial) -> SuperPolynomial {
    let sys = p.system().clone();
    let mut out = SuperPolynomial::zero(&sys);
    for (mono, coef) in c.poly.terms() {
        let mut q = p.clone();
        for (i, &e) in mono.iter().enumerate().rev() {
            for _ in 0..e {
                q = q.partial_left_idx(i);
            }
            if q.is_zero() {
                break;
            }
        }
        out = out.add(&q.scale(coef)).expect("same system");
    }
    out
}

/// phi_strange(p) = exp(sum_{k=1}^{K} alpha_{2k} c_{2k}) p. Exact whenever
/// 2K >= deg(p), because each c_{2k} lowers the degree by 2k.
pub fn phi_strange(spec: &LieSuperAlgebraSpec, p: &SuperPolynomial, series_order: usize) -> SuperPolynomial {
    let alphas = alpha_coefficients(series_order.max(1));
    let traces: Vec<TraceElement> = (1..=series_order)
        .map(|k| spec.trace_power(2 * k as u32))
        .collect();
    let apply_a = |q: &SuperPolynomial| -> SuperPolynomial {
        let mut acc = SuperPolynomial::zero(q.system());
        for (k, c) in traces.iter().enumerate() {
            let a = &alphas.coeffs[k + 1];
            if a.is_zero() || c.poly.is_zero() {
                continue;
            }
            acc = acc
                .add(&apply_trace_operator(c, q).scale(a))
                .expect("same system");
        }
        acc
    };
    let mut acc = p.clone();
    let mut term = p.clone();
    let mut m = 1i64;
    loop {
        term = apply_a(&term).scale(&rat(1, m));
        if term.is_zero() {
            break;
        }
        acc = acc.add(&term).expect("same system");
        m += 1;
    }
    acc
}

/// Outcome of one invariant pair (a, b).
#[derive(Debug, Clone, Serialize)]
pub struct PairOutcome {
    pub left: String,
    pub right: String,
    pub twisted_discrepancy_zero: bool,
    pub naive_discrepancy_zero: bool,
}

/// Multiplicativity report for phi_pbw . phi_strange on invariants.
#[derive(Debug, Clone, Serialize)]
pub struct DufloReport {
    pub algebra_dim: usize,
    pub max_degree: u32,
    pub series_order: usize,
    pub invariant_dims: Vec<usize>,
    pub pairs_checked: usize,
    pub discrepancies: usize,
    pub naive_nonzero_pairs: usize,
    /// A rendered nonzero naive discrepancy, when one exists.
    pub naive_witness: Option<String>,
    pub naive_witness_pair: Option<(String, String)>,
    pub pairs: Vec<PairOutcome>,
}

impl DufloReport {
    pub fn passed(&self) -> bool {
        self.discrepancies == 0
    }
}

/// Check that a |-> phi_pbw(phi_strange(a)) is multiplicative on all products
/// of invariants with total degree <= max_degree, and record how the naive
/// (untwisted) symmetrization fails.
pub fn duflo_verify(
    spec: &LieSuperAlgebraSpec,
    max_degree: u32,
    series_order: usize,
) -> DufloReport {
    let uea = Uea::new(spec);
    // invariant bases per degree 1..=max_degree-1 (a degree-0 partner makes
    // every pair trivially multiplicative)
    let mut inv: Vec<Vec<SuperPolynomial>> = vec![Vec::new()];
    let mut invariant_dims = vec![1]; // constants
    for n in 1..=max_degree {
        let basis = spec.invariants(n);
        invariant_dims.push(basis.len());
        inv.push(basis);
    }
    let mut flat: Vec<(u32, usize, &SuperPolynomial)> = Vec::new();
    for (n, basis) in inv.iter().enumerate().skip(1) {
        for (i, p) in basis.iter().enumerate() {
            flat.push((n as u32, i, p));
        }
    }
    let mut report = DufloReport {
        algebra_dim: spec.dim(),
        max_degree,
        series_order,
        invariant_dims,
        pairs_checked: 0,
        discrepancies: 0,
        naive_nonzero_pairs: 0,
        naive_witness: None,
        naive_witness_pair: None,
        pairs: Vec::new(),
    };
    let twisted: Vec<PBWElement> = flat
        .iter()
        .map(|(_, _, p)| uea.phi_pbw(&phi_strange(spec, p, series_order)))
        .collect();
    let naive: Vec<PBWElement> = flat.iter().map(|(_, _, p)| uea.phi_pbw(p)).collect();
    for s in 0..flat.len() {
        for t in s..flat.len() {
            let (da, ia, pa) = flat[s];
            let (db, ib, pb) = flat[t];
            if da + db > max_degree {
                continue;
            }
            let name_a = format!("inv[{da}][{ia}]");
            let name_b = format!("inv[{db}][{ib}]");
            let product = pa.multiply(pb).expect("same system");
            let lhs = uea.phi_pbw(&phi_strange(spec, &product, series_order));
            let rhs = uea.star(&twisted[s], &twisted[t]);
            let delta = lhs.sub(&rhs);
            let naive_delta = uea.phi_pbw(&product).sub(&uea.star(&naive[s], &naive[t]));
            report.pairs_checked += 1;
            if !delta.is_zero() {
                report.discrepancies += 1;
            }
            if !naive_delta.is_zero() {
                report.naive_nonzero_pairs += 1;
                if report.naive_witness.is_none() {
                    report.naive_witness = Some(naive_delta.render(spec));
                    report.naive_witness_pair = Some((name_a.clone(), name_b.clone()));
                }
            }
            report.pairs.push(PairOutcome {
                left: name_a,
                right: name_b,
                twisted_discrepancy_zero: delta.is_zero(),
                naive_discrepancy_zero: naive_delta.is_zero(),
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::catalog::*;
    use crate::superpoly::sampling;

    /// Independent route to the same series: l' = s'/s integrated termwise,
    /// working with series in y = x^2 where d/dx doubles into 2y d/dy + ...;
    /// concretely in x-coefficients: (2m) l_{2m} = [x^{2m-1}] (s' / s).
    fn alpha_oracle(order: usize) -> Vec<Rational> {
        let s = sinhc_half_series(order);
        // invert s: s_inv with s * s_inv = 1
        let mut s_inv = vec![Rational::zero(); order + 1];
        s_inv[0] = Rational::one();
        for m in 1..=order {
            let mut acc = Rational::zero();
            for j in 0..m {
                acc += &s_inv[j] * &s[m - j];
            }
            s_inv[m] = -acc;
        }
        // s'(x) = sum_m (2m) s_m x^{2m-1}; (s'/s) has x-coefficient at
        // 2m-1 equal to sum over splits; l_{2m} = that / (2m); halve at the
        // end for the square root
        let mut out = vec![Rational::zero(); order + 1];
        for m in 1..=order {
            let mut acc = Rational::zero();
            for j in 1..=m {
                acc += &s[j] * rat_int(2 * j as i64) * &s_inv[m - j];
            }
            out[m] = acc / rat_int(2 * m as i64) * rat(1, 2);
        }
        out
    }

    #[test]
    fn alpha_known_values() {
        let a = alpha_coefficients(6);
        assert_eq!(a.alpha(2), rat(1, 48));
        assert_eq!(a.alpha(4), rat(-1, 5760));
        assert_eq!(a.coeffs[0], rat_int(0));
    }

    #[test]
    fn alpha_matches_independent_oracle() {
        let a = alpha_coefficients(6);
        let oracle = alpha_oracle(6);
        assert_eq!(a.coeffs, oracle);
    }

    #[test]
    fn trace_operator_on_casimir() {
        let spec = sl2();
        let c2 = spec.trace_power(2);
        let sys = spec.primal_coordinates();
        let casimir = SuperPolynomial::var(&sys, 0)
            .multiply(&SuperPolynomial::var(&sys, 1))
            .unwrap()
            .scale(&rat_int(4))
            .add(&SuperPolynomial::var(&sys, 2).pow(2).unwrap())
            .unwrap();
        let r = apply_trace_operator(&c2, &casimir);
        assert_eq!(r, SuperPolynomial::constant(&sys, rat_int(48)));
        // degree < k kills
        let lin = SuperPolynomial::var(&sys, 2);
        assert!(apply_trace_operator(&c2, &lin).is_zero());
    }

    #[test]
    fn trace_operators_commute() {
        let spec = sl2();
        let sys = spec.primal_coordinates();
        let c2 = spec.trace_power(2);
        let c4 = spec.trace_power(4);
        let mut rng = sampling::Rng::new(0xa1fa_0001);
        for _ in 0..10 {
            let p = sampling::random_poly(&sys, 6, 4, &mut rng);
            let ab = apply_trace_operator(&c2, &apply_trace_operator(&c4, &p));
            let ba = apply_trace_operator(&c4, &apply_trace_operator(&c2, &p));
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn phi_strange_low_degree_identity() {
        let spec = sl2();
        let sys = spec.primal_coordinates();
        let p = SuperPolynomial::var(&sys, 0).add(&SuperPolynomial::one(&sys)).unwrap();
        assert_eq!(phi_strange(&spec, &p, 3), p);
    }

    #[test]
    fn phi_strange_on_casimir() {
        let spec = sl2();
        let sys = spec.primal_coordinates();
        let casimir = SuperPolynomial::var(&sys, 0)
            .multiply(&SuperPolynomial::var(&sys, 1))
            .unwrap()
            .scale(&rat_int(4))
            .add(&SuperPolynomial::var(&sys, 2).pow(2).unwrap())
            .unwrap();
        let r = phi_strange(&spec, &casimir, 3);
        // Casimir + alpha_2 * 48 = Casimir + 1
        let expected = casimir
            .add(&SuperPolynomial::constant(&sys, rat_int(1)))
            .unwrap();
        assert_eq!(r, expected);
    }

    #[test]
    fn phi_strange_identity_on_nilpotent() {
        let spec = heisenberg();
        let sys = spec.primal_coordinates();
        let mut rng = sampling::Rng::new(0xa1fa_0002);
        for _ in 0..5 {
            let p = sampling::random_poly(&sys, 4, 4, &mut rng);
            assert_eq!(phi_strange(&spec, &p, 3), p);
        }
    }

    #[test]
    fn phi_strange_is_equivariant() {
        let spec = sl2();
        let sys = spec.primal_coordinates();
        let mut rng = sampling::Rng::new(0xa1fa_0003);
        for _ in 0..8 {
            let p = sampling::random_poly(&sys, 4, 3, &mut rng);
            for i in 0..spec.dim() {
                let field = spec.coadjoint_field_on_symmetric(i);
                let lhs = phi_strange(&spec, &field.apply(&p).unwrap(), 3);
                let rhs = field.apply(&phi_strange(&spec, &p, 3)).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn phi_strange_unitriangular_invertible() {
        use crate::exactla::SparseMatrix;
        use crate::liealg::monomials_of_poly_degree;
        let spec = sl2();
        let sys = spec.primal_coordinates();
        // basis of S^{<=4}
        let mut basis = Vec::new();
        for d in 0..=4u32 {
            basis.extend(monomials_of_poly_degree(&sys, d));
        }
        let index: std::collections::BTreeMap<Vec<u32>, usize> = basis
            .iter()
            .cloned()
            .enumerate()
            .map(|(a, m)| (m, a))
            .collect();
        let mut m = SparseMatrix::zero(basis.len(), basis.len());
        for (col, mono) in basis.iter().enumerate() {
            let p = SuperPolynomial::monomial(&sys, mono.clone(), Rational::one());
            let im = phi_strange(&spec, &p, 3);
            for (mo, c) in im.terms() {
                m.set(index[mo], col, c.clone());
            }
        }
        assert_eq!(m.rank(), basis.len());
        // unitriangular: the same-degree block is the identity
        for (_col, mono) in basis.iter().enumerate() {
            let p = SuperPolynomial::monomial(&sys, mono.clone(), Rational::one());
            let im = phi_strange(&spec, &p, 3);
            let top = im.poly_degree_component(mono.iter().sum());
            assert_eq!(top, p);
        }
    }

    #[test]
    fn duflo_abelian_trivial() {
        let report = duflo_verify(&abelian(2), 4, 2);
        assert!(report.passed());
        assert_eq!(report.naive_nonzero_pairs, 0);
        assert!(report.pairs_checked > 0);
    }

    #[test]
    fn duflo_sl2_degree_four() {
        let report = duflo_verify(&sl2(), 4, 2);
        assert!(report.passed(), "{report:?}");
        // the (Casimir, Casimir) pair must witness naive failure
        assert!(report.naive_nonzero_pairs > 0);
        assert!(report.naive_witness.is_some());
    }

    #[test]
    fn duflo_heisenberg() {
        let report = duflo_verify(&heisenberg(), 4, 2);
        assert!(report.passed());
        assert_eq!(report.naive_nonzero_pairs, 0);
    }
}
