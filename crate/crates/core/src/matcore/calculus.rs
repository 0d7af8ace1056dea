//! Trace calculus: analytic and finite-difference trace derivatives, the
//! operator line element, and the orthonormal real parameterization of
//! Hermitian matrices used by phase-space code.

use num_complex::Complex64;

use crate::error::{CoreError, CoreResult};
use crate::matcore::matrix::ComplexMatrix;
use crate::matcore::polynomial::PolynomialModel;

/// Analytic trace derivative `δ Tr W / δ var` at the given assignment.
pub fn trace_derivative(
    w: &PolynomialModel,
    var: &str,
    at: &[&ComplexMatrix],
) -> CoreResult<ComplexMatrix> {
    let id = w
        .var_id(var)
        .ok_or_else(|| CoreError::UnknownVariable(var.to_string()))?;
    w.derivative(id).evaluate(at)
}

/// Finite-difference trace derivative: central differences of `Tr W`
/// with respect to the real and imaginary part of every entry of `var`,
/// assembled into the gradient matrix with the same convention as
/// [`trace_derivative`] (`d Tr W = Tr(D dz)`, i.e. `D_ab = ∂TrW/∂z_ba`).
pub fn fd_trace_derivative(
    w: &PolynomialModel,
    var: &str,
    at: &[&ComplexMatrix],
    h: f64,
) -> CoreResult<ComplexMatrix> {
    if !(h > 0.0 && h < 1.0) {
        return Err(CoreError::InvalidInput(format!(
            "finite-difference step h must lie in (0, 1), got {h}"
        )));
    }
    let id = w
        .var_id(var)
        .ok_or_else(|| CoreError::UnknownVariable(var.to_string()))?;
    let idx = id.0;
    let base = at[idx].clone();
    let dim = base.dim();

    let eval_at = |m: &ComplexMatrix| -> CoreResult<Complex64> {
        let mut vals: Vec<&ComplexMatrix> = at.to_vec();
        vals[idx] = m;
        w.eval_trace(&vals)
    };

    let mut out = ComplexMatrix::zeros(dim);
    for b in 0..dim {
        for a in 0..dim {
            let mut plus = base.clone();
            plus[(b, a)] += Complex64::new(h, 0.0);
            let mut minus = base.clone();
            minus[(b, a)] -= Complex64::new(h, 0.0);
            let d_re = (eval_at(&plus)? - eval_at(&minus)?) / (2.0 * h);

            let mut plus = base.clone();
            plus[(b, a)] += Complex64::new(0.0, h);
            let mut minus = base.clone();
            minus[(b, a)] -= Complex64::new(0.0, h);
            let d_im = (eval_at(&plus)? - eval_at(&minus)?) / (2.0 * h);

            // Wirtinger combination; Tr W is holomorphic in the entries.
            out[(a, b)] = 0.5 * (d_re - Complex64::new(0.0, 1.0) * d_im);
        }
    }
    Ok(out)
}

/// `Tr[dt² − dx² − dy² − dz²]` for four displacement matrices of equal
/// dimension; the imaginary part must vanish when all four are Hermitian.
pub fn trace_line_element(dcoords: &[ComplexMatrix; 4]) -> CoreResult<f64> {
    let dim = dcoords[0].dim();
    for m in dcoords.iter().skip(1) {
        if m.dim() != dim {
            return Err(CoreError::DimMismatch {
                expected: dim,
                actual: m.dim(),
            });
        }
    }
    let mut total = dcoords[0].mul(&dcoords[0]).trace();
    for m in &dcoords[1..] {
        total -= m.mul(m).trace();
    }
    let all_hermitian = dcoords.iter().all(|m| m.is_hermitian(1e-12));
    let scale = dcoords
        .iter()
        .map(|m| m.frobenius_norm())
        .fold(1.0f64, f64::max);
    if all_hermitian && total.im.abs() > 1e-12 * scale * scale {
        return Err(CoreError::InvalidInput(format!(
            "line element of Hermitian displacements has imaginary part {}",
            total.im
        )));
    }
    Ok(total.re)
}

/// Boost mixing the time coordinate with spatial `axis` (1..=3):
/// `dt' = γ(dt − β dx)`, `dx' = γ(dx − β dt)`.
pub fn lorentz_boost(
    dcoords: &[ComplexMatrix; 4],
    axis: usize,
    beta: f64,
) -> CoreResult<[ComplexMatrix; 4]> {
    if !(1..=3).contains(&axis) {
        return Err(CoreError::InvalidInput(format!(
            "boost axis must be 1..=3, got {axis}"
        )));
    }
    if beta.abs() >= 1.0 {
        return Err(CoreError::InvalidInput(format!(
            "boost parameter must satisfy |beta| < 1, got {beta}"
        )));
    }
    let gamma = 1.0 / (1.0 - beta * beta).sqrt();
    let mut out = dcoords.clone();
    out[0] = dcoords[0]
        .sub(&dcoords[axis].scale_re(beta))
        .scale_re(gamma);
    out[axis] = dcoords[axis]
        .sub(&dcoords[0].scale_re(beta))
        .scale_re(gamma);
    Ok(out)
}

/// Rotation mixing two spatial coordinates.
pub fn spatial_rotation(
    dcoords: &[ComplexMatrix; 4],
    ax1: usize,
    ax2: usize,
    angle: f64,
) -> CoreResult<[ComplexMatrix; 4]> {
    if !(1..=3).contains(&ax1) || !(1..=3).contains(&ax2) || ax1 == ax2 {
        return Err(CoreError::InvalidInput(
            "rotation axes must be distinct spatial indices".into(),
        ));
    }
    let (s, c) = angle.sin_cos();
    let mut out = dcoords.clone();
    out[ax1] = dcoords[ax1].scale_re(c).sub(&dcoords[ax2].scale_re(s));
    out[ax2] = dcoords[ax1].scale_re(s).add(&dcoords[ax2].scale_re(c));
    Ok(out)
}

/// Number of real coordinates parameterizing a Hermitian `n × n` matrix.
pub fn hermitian_basis_dim(n: usize) -> usize {
    n * n
}

/// Coordinates of a Hermitian matrix in the orthonormal basis
/// `{e_ii} ∪ {(e_ij + e_ji)/√2, (−i e_ij + i e_ji)/√2 : i < j}`.
/// The map is an isometry: `‖M‖_F² = Σ x_k²`.
pub fn hermitian_to_coords(m: &ComplexMatrix, out: &mut Vec<f64>) {
    let n = m.dim();
    out.clear();
    out.reserve(n * n);
    let sqrt2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(sqrt2 * m[(i, j)].re);
            out.push(-sqrt2 * m[(i, j)].im);
        }
    }
}

/// Inverse of [`hermitian_to_coords`].
pub fn hermitian_from_coords(n: usize, coords: &[f64], out: &mut ComplexMatrix) {
    assert_eq!(coords.len(), n * n, "coordinate count mismatch");
    assert_eq!(out.dim(), n, "output dimension mismatch");
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        out[(i, i)] = Complex64::new(coords[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let re = coords[k] * inv_sqrt2;
            let im = -coords[k + 1] * inv_sqrt2;
            k += 2;
            out[(i, j)] = Complex64::new(re, im);
            out[(j, i)] = Complex64::new(re, -im);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::matrix::test_support::*;
    use crate::matcore::matrix::AdjointClass;
    use crate::matcore::polynomial::Factor;
    use crate::rng::CounterRng;

    fn square_model() -> PolynomialModel {
        let mut w = PolynomialModel::new();
        let z = w.declare_var("z", AdjointClass::General);
        w.add_term_re(1.0, vec![Factor::var(z), Factor::var(z)]);
        w
    }

    #[test]
    fn fd_matches_closed_form_square() {
        let w = square_model();
        let mut rng = test_rng(21);
        let z = random_general(2, 1.0, &mut rng);
        let fd = fd_trace_derivative(&w, "z", &[&z], 1e-5).unwrap();
        assert!(fd.sub(&z.scale_re(2.0)).frobenius_norm() < 1e-8);
    }

    #[test]
    fn fd_linear_term_gives_constant() {
        let mut rng = test_rng(22);
        let a = random_general(3, 1.0, &mut rng);
        let mut w = PolynomialModel::new();
        let z = w.declare_var("z", AdjointClass::General);
        w.add_term_re(1.0, vec![Factor::constant("a", a.clone()), Factor::var(z)]);
        let z_val = random_general(3, 1.0, &mut rng);
        let fd = fd_trace_derivative(&w, "z", &[&z_val], 1e-5).unwrap();
        assert!(fd.sub(&a).frobenius_norm() < 1e-8);
    }

    #[test]
    fn fd_constant_model_gives_zero() {
        let mut w = PolynomialModel::new();
        let _ = w.declare_var("z", AdjointClass::General);
        w.add_term_re(3.5, vec![]);
        let z = ComplexMatrix::identity(2);
        let fd = fd_trace_derivative(&w, "z", &[&z], 1e-4).unwrap();
        assert!(fd.frobenius_norm() < 1e-12);
    }

    #[test]
    fn fd_rejects_bad_step() {
        let w = square_model();
        let z = ComplexMatrix::identity(2);
        assert!(fd_trace_derivative(&w, "z", &[&z], 0.0).is_err());
        assert!(fd_trace_derivative(&w, "z", &[&z], 1.5).is_err());
    }

    #[test]
    fn fd_unknown_variable_errors() {
        let w = square_model();
        let z = ComplexMatrix::identity(2);
        assert!(matches!(
            trace_derivative(&w, "nope", &[&z]),
            Err(CoreError::UnknownVariable(_))
        ));
    }

    fn random_monomial_model(rng: &mut CounterRng, dim: usize) -> PolynomialModel {
        let mut w = PolynomialModel::new();
        let z = w.declare_var("z", AdjointClass::General);
        let n_terms = 1 + (rng.next_u64() % 3) as usize;
        for _ in 0..n_terms {
            let degree = 1 + (rng.next_u64() % 4) as usize; // 1..=4
            let mut factors = Vec::new();
            for _ in 0..degree {
                factors.push(Factor::var(z));
                if rng.uniform() < 0.4 {
                    factors.push(Factor::constant(
                        "c",
                        random_general(dim, 0.8, rng),
                    ));
                }
            }
            let coeff = Complex64::new(rng.normal(), rng.normal());
            w.add_term(coeff, factors);
        }
        w
    }

    #[test]
    fn analytic_matches_fd_over_random_models() {
        let mut rng = test_rng(23);
        for case in 0..120 {
            let dim = 2 + (case % 3);
            let w = random_monomial_model(&mut rng, dim);
            let z = random_general(dim, 0.8, &mut rng);
            let analytic = trace_derivative(&w, "z", &[&z]).unwrap();
            let fd = fd_trace_derivative(&w, "z", &[&z], 1e-5).unwrap();
            let scale = analytic.frobenius_norm().max(1e-6);
            let rel = analytic.sub(&fd).frobenius_norm() / scale;
            assert!(rel <= 1e-6, "case {case}: rel error {rel}");
        }
    }

    fn random_displacements(rng: &mut CounterRng, dim: usize) -> [ComplexMatrix; 4] {
        [
            ComplexMatrix::random_hermitian(dim, 1.0, rng),
            ComplexMatrix::random_hermitian(dim, 1.0, rng),
            ComplexMatrix::random_hermitian(dim, 1.0, rng),
            ComplexMatrix::random_hermitian(dim, 1.0, rng),
        ]
    }

    #[test]
    fn pure_time_displacement() {
        let d = [
            ComplexMatrix::identity(2),
            ComplexMatrix::zeros(2),
            ComplexMatrix::zeros(2),
            ComplexMatrix::zeros(2),
        ];
        assert!((trace_line_element(&d).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn line_element_boost_invariant() {
        let mut rng = test_rng(24);
        for axis in 1..=3 {
            let d = random_displacements(&mut rng, 3);
            let ds2 = trace_line_element(&d).unwrap();
            let boosted = lorentz_boost(&d, axis, 0.6).unwrap();
            let ds2b = trace_line_element(&boosted).unwrap();
            let scale = ds2.abs().max(1.0);
            assert!(
                (ds2 - ds2b).abs() <= 1e-10 * scale,
                "axis {axis}: {ds2} vs {ds2b}"
            );
        }
    }

    #[test]
    fn line_element_rotation_invariant() {
        let mut rng = test_rng(25);
        let d = random_displacements(&mut rng, 3);
        let ds2 = trace_line_element(&d).unwrap();
        let rot = spatial_rotation(&d, 1, 3, 0.83).unwrap();
        let ds2r = trace_line_element(&rot).unwrap();
        assert!((ds2 - ds2r).abs() <= 1e-10 * ds2.abs().max(1.0));
    }

    #[test]
    fn line_element_unitary_invariant() {
        let mut rng = test_rng(26);
        let d = random_displacements(&mut rng, 3);
        let u = random_unitary(3, &mut rng);
        let udag = u.adjoint();
        let conj: Vec<ComplexMatrix> = d.iter().map(|m| u.mul(m).mul(&udag)).collect();
        let conj: [ComplexMatrix; 4] = [
            conj[0].clone(),
            conj[1].clone(),
            conj[2].clone(),
            conj[3].clone(),
        ];
        let ds2 = trace_line_element(&d).unwrap();
        // unitary conjugation breaks exact Hermiticity only at roundoff;
        // compare the complex traces directly
        let ds2u = trace_line_element(&conj).unwrap();
        assert!((ds2 - ds2u).abs() <= 1e-10 * ds2.abs().max(1.0));
    }

    #[test]
    fn line_element_dim_mismatch() {
        let d = [
            ComplexMatrix::identity(2),
            ComplexMatrix::zeros(3),
            ComplexMatrix::zeros(2),
            ComplexMatrix::zeros(2),
        ];
        assert!(matches!(
            trace_line_element(&d),
            Err(CoreError::DimMismatch { .. })
        ));
    }

    #[test]
    fn hermitian_coords_round_trip_isometry() {
        let mut rng = test_rng(27);
        let m = ComplexMatrix::random_hermitian(4, 1.3, &mut rng);
        let mut coords = Vec::new();
        hermitian_to_coords(&m, &mut coords);
        assert_eq!(coords.len(), hermitian_basis_dim(4));
        let norm2: f64 = coords.iter().map(|x| x * x).sum();
        assert!((norm2.sqrt() - m.frobenius_norm()).abs() < 1e-12);

        let mut back = ComplexMatrix::zeros(4);
        hermitian_from_coords(4, &coords, &mut back);
        assert!(back.sub(&m).frobenius_norm() < 1e-12);
    }
}
