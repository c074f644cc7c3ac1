//! Clamped B-spline basis systems on `[0, T]`.
//!
//! A [`BasisSystem`] owns its knot vector together with the exact Gram matrix
//! `G[k][m] = ∫ φ_k φ_m dt` and the roughness penalty
//! `R[k][m] = ∫ φ_k⁽ᵈ⁾ φ_m⁽ᵈ⁾ dt`. Both are integrated span by span with
//! Gauss–Legendre rules that are exact for the piecewise-polynomial integrands.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serializable description of a basis; the matrices are rebuilt on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDescriptor {
    pub kind: BasisKind,
    pub domain_end: f64,
    pub n_basis: usize,
    pub order: usize,
    pub penalty_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Bspline,
}

impl BasisDescriptor {
    pub fn build(&self) -> Result<BasisSystem> {
        match self.kind {
            BasisKind::Bspline => {
                make_bspline_basis(self.domain_end, self.n_basis, self.order, self.penalty_order)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BasisSystem {
    domain_end: f64,
    order: usize,
    penalty_order: usize,
    knots: Vec<f64>,
    n_basis: usize,
    gram: DMatrix<f64>,
    penalty: DMatrix<f64>,
    penalty_factor: DMatrix<f64>,
}

impl PartialEq for BasisSystem {
    fn eq(&self, other: &Self) -> bool {
        self.descriptor() == other.descriptor()
    }
}

/// Clamped B-spline basis with `n_basis - order` uniform interior knots.
pub fn make_bspline_basis(
    domain_end: f64,
    n_basis: usize,
    order: usize,
    penalty_order: usize,
) -> Result<BasisSystem> {
    if !(domain_end.is_finite() && domain_end > 0.0) {
        return Err(Error::Config(format!(
            "domain end must be positive and finite, got {domain_end}"
        )));
    }
    if order == 0 {
        return Err(Error::Config("B-spline order must be at least 1".into()));
    }
    if n_basis < order {
        return Err(Error::Config(format!(
            "number of basis functions ({n_basis}) must be at least the order ({order})"
        )));
    }
    if penalty_order >= order {
        return Err(Error::Config(format!(
            "penalty derivative order {penalty_order} vanishes identically for order-{order} splines"
        )));
    }

    let n_interior = n_basis - order;
    let mut knots = Vec::with_capacity(n_basis + order);
    knots.extend(std::iter::repeat(0.0).take(order));
    let n_spans = n_interior + 1;
    for i in 1..=n_interior {
        knots.push(domain_end * i as f64 / n_spans as f64);
    }
    knots.extend(std::iter::repeat(domain_end).take(order));

    let mut basis = BasisSystem {
        domain_end,
        order,
        penalty_order,
        knots,
        n_basis,
        gram: DMatrix::zeros(0, 0),
        penalty: DMatrix::zeros(0, 0),
        penalty_factor: DMatrix::zeros(0, 0),
    };
    basis.gram = basis.integrate_products(0);
    basis.penalty_factor = basis.quadrature_factor(penalty_order);
    basis.penalty = basis.penalty_factor.tr_mul(&basis.penalty_factor);
    Ok(basis)
}

impl BasisSystem {
    pub fn domain_start(&self) -> f64 {
        0.0
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn penalty_order(&self) -> usize {
        self.penalty_order
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Roughness penalty for the configured derivative order.
    pub fn penalty(&self) -> &DMatrix<f64> {
        &self.penalty
    }

    /// `B` with `BᵀB = penalty()`: one row per quadrature node, holding
    /// `√w · φ⁽ᵈ⁾(node)ᵀ`.
    pub fn penalty_factor(&self) -> &DMatrix<f64> {
        &self.penalty_factor
    }

    pub fn descriptor(&self) -> BasisDescriptor {
        BasisDescriptor {
            kind: BasisKind::Bspline,
            domain_end: self.domain_end,
            n_basis: self.n_basis,
            order: self.order,
            penalty_order: self.penalty_order,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        (0.0..=self.domain_end).contains(&t)
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::Domain {
                t,
                start: 0.0,
                end: self.domain_end,
            })
        }
    }

    /// `(φ_1(t), …, φ_K(t))`.
    pub fn eval_basis(&self, t: f64) -> Result<Vec<f64>> {
        self.eval_basis_deriv(t, 0)
    }

    /// `d`-th derivatives of every basis function at `t`.
    pub fn eval_basis_deriv(&self, t: f64, d: usize) -> Result<Vec<f64>> {
        let (first, local) = self.eval_local(t, d)?;
        let mut out = vec![0.0; self.n_basis];
        out[first..first + local.len()].copy_from_slice(&local);
        Ok(out)
    }

    /// Nonzero `d`-th derivatives at `t`: the index of the first active basis
    /// function and the `order` values starting there.
    pub fn eval_local(&self, t: f64, d: usize) -> Result<(usize, Vec<f64>)> {
        if d >= self.order {
            return Err(Error::Config(format!(
                "derivative order {d} must be below the spline order {}",
                self.order
            )));
        }
        self.check_domain(t)?;
        let span = self.find_span(t);
        let ders = self.span_derivatives(span, t, d);
        Ok((span + 1 - self.order, ders.into_iter().nth(d).unwrap_or_default()))
    }

    /// Rows `φ(t_l)ᵀ` for each evaluation time.
    pub fn design_matrix(&self, times: &[f64]) -> Result<DMatrix<f64>> {
        let mut phi = DMatrix::zeros(times.len(), self.n_basis);
        for (row, &t) in times.iter().enumerate() {
            let (first, local) = self.eval_local(t, 0)?;
            for (offset, v) in local.into_iter().enumerate() {
                phi[(row, first + offset)] = v;
            }
        }
        Ok(phi)
    }

    /// `∫ φ_k⁽ᵈ⁾ φ_m⁽ᵈ⁾ dt` for an arbitrary derivative order below `order`.
    pub fn penalty_matrix(&self, d: usize) -> Result<DMatrix<f64>> {
        if d >= self.order {
            return Err(Error::Config(format!(
                "penalty derivative order {d} must be below the spline order {}",
                self.order
            )));
        }
        Ok(self.integrate_products(d))
    }

    /// Square-root factor of [`penalty_matrix`](Self::penalty_matrix)`(d)`.
    pub fn penalty_factor_matrix(&self, d: usize) -> Result<DMatrix<f64>> {
        if d >= self.order {
            return Err(Error::Config(format!(
                "penalty derivative order {d} must be below the spline order {}",
                self.order
            )));
        }
        Ok(self.quadrature_factor(d))
    }

    // Knot span `s` with knots[s] <= t < knots[s+1]; t == T uses the last
    // nonempty span so the final basis function reaches 1.
    fn find_span(&self, t: f64) -> usize {
        let last = self.n_basis - 1;
        if t >= self.knots[last + 1] {
            return last;
        }
        let lo = self.order - 1;
        // knots[lo..=last+1] is sorted; first index with knot > t, minus one.
        let upper = self.knots[lo..=last + 1].partition_point(|&k| k <= t);
        (lo + upper - 1).clamp(lo, last)
    }

    // Derivatives 0..=n of the `order` basis functions active on `span`.
    fn span_derivatives(&self, span: usize, t: f64, n: usize) -> Vec<Vec<f64>> {
        let p = self.order - 1;
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = t - u[span + 1 - j];
            right[j] = u[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![0.0; p + 1]; n + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let (pi, ni) = (p as isize, n as isize);
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=pi {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=ni {
                let mut d = 0.0;
                let rk = r - k;
                let pk = pi - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk as usize];
                }
                let j1 = if rk >= -1 { 1 } else { -rk };
                let j2 = if r - 1 <= pk { k - 1 } else { pi - r };
                for j in j1..=j2 {
                    let (ju, rkj) = (j as usize, (rk + j) as usize);
                    a[s2][ju] = (a[s1][ju] - a[s1][ju - 1]) / ndu[(pk + 1) as usize][rkj];
                    d += a[s2][ju] * ndu[rkj][pk as usize];
                }
                if r <= pk {
                    let ku = k as usize;
                    a[s2][ku] = -a[s1][ku - 1] / ndu[(pk + 1) as usize][r as usize];
                    d += a[s2][ku] * ndu[r as usize][pk as usize];
                }
                ders[k as usize][r as usize] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=n {
            for v in ders[k].iter_mut() {
                *v *= factor;
            }
            factor *= (p - k) as f64;
        }
        ders
    }

    fn integrate_products(&self, d: usize) -> DMatrix<f64> {
        let b = self.quadrature_factor(d);
        b.tr_mul(&b)
    }

    // Rows √(w_q)·φ⁽ᵈ⁾(x_q)ᵀ over the Gauss nodes of every nonempty span, so
    // that BᵀB is the exact integral of the products.
    fn quadrature_factor(&self, d: usize) -> DMatrix<f64> {
        let (nodes, weights) = gauss_legendre(self.order + 1);
        let spans: Vec<usize> = ((self.order - 1)..self.n_basis)
            .filter(|&s| self.knots[s + 1] > self.knots[s])
            .collect();
        let mut out = DMatrix::zeros(spans.len() * nodes.len(), self.n_basis);
        let mut row = 0;
        for span in spans {
            let (a, b) = (self.knots[span], self.knots[span + 1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let first = span + 1 - self.order;
            for (&x, &w) in nodes.iter().zip(&weights) {
                let ders = self.span_derivatives(span, mid + half * x, d);
                let scale = (w * half).sqrt();
                for (i, v) in ders[d].iter().enumerate() {
                    out[(row, first + i)] = scale * v;
                }
                row += 1;
            }
        }
        out
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn_1 = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn_1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Textbook recursive Cox–de Boor definition with the left-limit rule at T.
    fn cox_de_boor(knots: &[f64], i: usize, order: usize, t: f64, t_end: f64) -> f64 {
        if order == 1 {
            let (a, b) = (knots[i], knots[i + 1]);
            let inside = if t == t_end { a < t && t <= b } else { a <= t && t < b };
            return if inside { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = knots[i + order - 1] - knots[i];
        if d1 > 0.0 {
            v += (t - knots[i]) / d1 * cox_de_boor(knots, i, order - 1, t, t_end);
        }
        let d2 = knots[i + order] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + order] - t) / d2 * cox_de_boor(knots, i + 1, order - 1, t, t_end);
        }
        v
    }

    fn trapezoid_products(basis: &BasisSystem, d: usize, points: usize) -> DMatrix<f64> {
        let k = basis.n_basis();
        let h = basis.domain_end() / (points - 1) as f64;
        let mut out = DMatrix::zeros(k, k);
        for g in 0..points {
            let t = (g as f64 * h).min(basis.domain_end());
            let w = if g == 0 || g == points - 1 { 0.5 * h } else { h };
            let v = basis.eval_basis_deriv(t, d).unwrap();
            for a in 0..k {
                for b in 0..k {
                    out[(a, b)] += w * v[a] * v[b];
                }
            }
        }
        out
    }

    fn max_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let scale = b.abs().max();
        (a - b).abs().max() / scale
    }

    #[test]
    fn constant_basis_gram_is_domain_length() {
        let b = make_bspline_basis(1.0, 1, 1, 0).unwrap();
        assert!((b.gram()[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(b.eval_basis(0.42).unwrap(), vec![1.0]);
        assert_eq!(b.eval_basis(1.0).unwrap(), vec![1.0]);
        let b3 = make_bspline_basis(3.0, 1, 1, 0).unwrap();
        assert!((b3.gram()[(0, 0)] - 3.0).abs() < 1e-14);
        // d = 0 penalty of the constant basis equals the Gram matrix
        assert_eq!(b3.penalty(), b3.gram());
    }

    #[test]
    fn linear_basis_partition_of_unity() {
        let b = make_bspline_basis(1.0, 2, 2, 0).unwrap();
        let v = b.eval_basis(0.3).unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((v[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn rejects_misconfiguration() {
        assert!(matches!(make_bspline_basis(1.0, 3, 4, 2), Err(Error::Config(_))));
        assert!(matches!(make_bspline_basis(1.0, 6, 2, 2), Err(Error::Config(_))));
        assert!(matches!(make_bspline_basis(0.0, 6, 4, 2), Err(Error::Config(_))));
        assert!(matches!(make_bspline_basis(1.0, 6, 0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn cubic_boundary_values_are_unit_vectors() {
        let b = make_bspline_basis(1.0, 6, 4, 2).unwrap();
        let v0 = b.eval_basis(0.0).unwrap();
        assert_eq!(v0, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v1 = b.eval_basis(1.0).unwrap();
        assert!((v1[5] - 1.0).abs() < 1e-15);
        assert!(v1[..5].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn cubic_matches_cox_de_boor_recursion() {
        let b = make_bspline_basis(1.0, 6, 4, 2).unwrap();
        for &t in &[0.0, 0.1, 0.33, 0.5, 0.77, 1.0] {
            let v = b.eval_basis(t).unwrap();
            for (k, vk) in v.iter().enumerate() {
                let oracle = cox_de_boor(b.knots(), k, 4, t, 1.0);
                assert!((vk - oracle).abs() < 1e-14, "t={t} k={k}: {vk} vs {oracle}");
            }
        }
    }

    #[test]
    fn outside_domain_is_rejected() {
        let b = make_bspline_basis(2.0, 6, 4, 2).unwrap();
        assert!(matches!(b.eval_basis(-1e-9), Err(Error::Domain { .. })));
        assert!(matches!(b.eval_basis(2.0 + 1e-9), Err(Error::Domain { .. })));
    }

    #[test]
    fn derivative_zero_is_evaluation_and_high_orders_rejected() {
        let b = make_bspline_basis(1.0, 7, 4, 2).unwrap();
        assert_eq!(b.eval_basis(0.41).unwrap(), b.eval_basis_deriv(0.41, 0).unwrap());
        let lin = make_bspline_basis(1.0, 4, 2, 1).unwrap();
        assert!(lin.eval_basis_deriv(0.5, 2).is_err());
        assert!(lin.penalty_matrix(2).is_err());
    }

    #[test]
    fn first_derivative_matches_central_difference() {
        let b = make_bspline_basis(1.0, 6, 4, 2).unwrap();
        let h = 1e-6;
        let d1 = b.eval_basis_deriv(0.5, 1).unwrap();
        let plus = b.eval_basis(0.5 + h).unwrap();
        let minus = b.eval_basis(0.5 - h).unwrap();
        for k in 0..6 {
            let fd = (plus[k] - minus[k]) / (2.0 * h);
            assert!((d1[k] - fd).abs() < 1e-5, "k={k}: {} vs {fd}", d1[k]);
        }
        // second derivative against differences of the first
        let d2 = b.eval_basis_deriv(0.37, 2).unwrap();
        let p1 = b.eval_basis_deriv(0.37 + h, 1).unwrap();
        let m1 = b.eval_basis_deriv(0.37 - h, 1).unwrap();
        for k in 0..6 {
            assert!((d2[k] - (p1[k] - m1[k]) / (2.0 * h)).abs() < 1e-4);
        }
    }

    #[test]
    fn gram_and_penalty_match_dense_trapezoid() {
        let b = make_bspline_basis(1.0, 6, 4, 2).unwrap();
        let gram_oracle = trapezoid_products(&b, 0, 10_000);
        assert!(max_rel_err(b.gram(), &gram_oracle) < 1e-6);
        let pen_oracle = trapezoid_products(&b, 2, 10_000);
        assert!(max_rel_err(b.penalty(), &pen_oracle) < 1e-6);
        // non-unit domain and a different order
        let q = make_bspline_basis(5.0, 9, 3, 1).unwrap();
        assert!(max_rel_err(q.gram(), &trapezoid_products(&q, 0, 10_000)) < 1e-6);
        assert!(max_rel_err(q.penalty(), &trapezoid_products(&q, 1, 10_000)) < 1e-6);
    }

    #[test]
    fn partition_of_unity_on_dense_grid() {
        for (k, order) in [(6, 4), (12, 4), (5, 3), (1, 1), (9, 2)] {
            let b = make_bspline_basis(3.5, k, order, order - 1).unwrap();
            for g in 0..1000 {
                let t = 3.5 * g as f64 / 999.0;
                let v = b.eval_basis(t).unwrap();
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(v.iter().all(|&x| (-1e-15..=1.0 + 1e-15).contains(&x)));
            }
        }
    }

    #[test]
    fn gram_spd_and_penalty_psd() {
        let b = make_bspline_basis(1.0, 12, 4, 2).unwrap();
        assert!(b.gram().clone().cholesky().is_some());
        assert!((b.gram() - b.gram().transpose()).abs().max() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c = nalgebra::DVector::from_fn(12, |_, _| rng.gen_range(-1.0..1.0));
            let q = (c.transpose() * b.penalty() * &c)[(0, 0)];
            assert!(q >= -1e-12);
        }
    }

    #[test]
    fn penalty_annihilates_lines() {
        // Greville abscissae reproduce linear functions exactly.
        let b = make_bspline_basis(1.0, 7, 3, 2).unwrap();
        let order = b.order();
        let knots = b.knots();
        let c = nalgebra::DVector::from_fn(7, |k, _| {
            let g: f64 = knots[k + 1..k + order].iter().sum::<f64>() / (order - 1) as f64;
            2.0 - 3.0 * g
        });
        let v = b.eval_basis(0.3).unwrap();
        let at: f64 = v.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
        assert!((at - (2.0 - 0.9)).abs() < 1e-12);
        let q = (c.transpose() * b.penalty() * &c)[(0, 0)];
        assert!(q.abs() < 1e-10);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // ∫ x^(2n-2) over [-1,1] = 2/(2n-1)
            let deg = 2 * n - 2;
            let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((num - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13);
        }
    }
}
