//! Trace polynomials: sums of coefficient-weighted ordered monomials in
//! named matrix variables and fixed constant matrices.
//!
//! The trace of such a polynomial is the scalar object all dynamics in
//! this crate derive from; the analytic trace derivative lives in
//! [`super::calculus`], but the cyclic-rearrangement rule itself is a
//! structural operation on monomials and is implemented here as
//! [`PolynomialModel::derivative`].

use num_complex::Complex64;

use crate::error::{CoreError, CoreResult};
use crate::matcore::matrix::{AdjointClass, ComplexMatrix};

/// Handle to a declared variable slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub(crate) usize);

#[derive(Debug, Clone)]
pub enum Factor {
    Var(VarId),
    Const { label: String, matrix: ComplexMatrix },
}

impl Factor {
    pub fn var(id: VarId) -> Self {
        Factor::Var(id)
    }

    pub fn constant(label: impl Into<String>, matrix: ComplexMatrix) -> Self {
        Factor::Const {
            label: label.into(),
            matrix,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Monomial {
    pub coeff: Complex64,
    pub factors: Vec<Factor>,
}

/// A trace polynomial over declared matrix variables.
#[derive(Debug, Clone, Default)]
pub struct PolynomialModel {
    vars: Vec<(String, AdjointClass)>,
    monomials: Vec<Monomial>,
}

impl PolynomialModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_var(&mut self, name: impl Into<String>, class: AdjointClass) -> VarId {
        let name = name.into();
        assert!(
            self.var_id(&name).is_none(),
            "variable `{name}` declared twice"
        );
        self.vars.push((name, class));
        VarId(self.vars.len() - 1)
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|(n, _)| n == name).map(VarId)
    }

    pub fn var_name(&self, id: VarId) -> &str {
        &self.vars[id.0].0
    }

    pub fn var_class(&self, id: VarId) -> AdjointClass {
        self.vars[id.0].1
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn var_names(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|(n, _)| n.as_str())
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn add_term(&mut self, coeff: Complex64, factors: Vec<Factor>) {
        for f in &factors {
            if let Factor::Var(VarId(i)) = f {
                assert!(*i < self.vars.len(), "undeclared variable in monomial");
            }
        }
        self.monomials.push(Monomial { coeff, factors });
    }

    pub fn add_term_re(&mut self, coeff: f64, factors: Vec<Factor>) {
        self.add_term(Complex64::new(coeff, 0.0), factors);
    }

    /// Add every monomial of `other`, scaled; `other` must share this
    /// model's variable declarations (checked by name).
    pub fn add_scaled_model(&mut self, other: &PolynomialModel, scale: Complex64) {
        for (name, _) in &other.vars {
            assert!(
                self.var_id(name).is_some(),
                "variable `{name}` not declared in target model"
            );
        }
        for m in &other.monomials {
            let factors = m
                .factors
                .iter()
                .map(|f| match f {
                    Factor::Var(id) => {
                        Factor::Var(self.var_id(other.var_name(*id)).unwrap())
                    }
                    c => c.clone(),
                })
                .collect();
            self.monomials.push(Monomial {
                coeff: m.coeff * scale,
                factors,
            });
        }
    }

    pub fn max_degree(&self) -> usize {
        self.monomials
            .iter()
            .map(|m| {
                m.factors
                    .iter()
                    .filter(|f| matches!(f, Factor::Var(_)))
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    fn check_assignment(&self, vals: &[&ComplexMatrix]) -> CoreResult<usize> {
        if vals.len() != self.vars.len() {
            return Err(CoreError::DimMismatch {
                expected: self.vars.len(),
                actual: vals.len(),
            });
        }
        let dim = vals
            .first()
            .map(|m| m.dim())
            .or_else(|| {
                self.monomials.iter().find_map(|m| {
                    m.factors.iter().find_map(|f| match f {
                        Factor::Const { matrix, .. } => Some(matrix.dim()),
                        _ => None,
                    })
                })
            })
            .ok_or_else(|| {
                CoreError::InvalidInput("cannot infer matrix dimension for evaluation".into())
            })?;
        for v in vals {
            if v.dim() != dim {
                return Err(CoreError::DimMismatch {
                    expected: dim,
                    actual: v.dim(),
                });
            }
        }
        Ok(dim)
    }

    fn monomial_product(
        &self,
        m: &Monomial,
        vals: &[&ComplexMatrix],
        dim: usize,
    ) -> CoreResult<ComplexMatrix> {
        let mut acc: Option<ComplexMatrix> = None;
        for f in &m.factors {
            let mat = match f {
                Factor::Var(VarId(i)) => vals[*i],
                Factor::Const { matrix, .. } => {
                    if matrix.dim() != dim {
                        return Err(CoreError::DimMismatch {
                            expected: dim,
                            actual: matrix.dim(),
                        });
                    }
                    matrix
                }
            };
            acc = Some(match acc {
                None => mat.clone(),
                Some(prev) => prev.mul(mat),
            });
        }
        Ok(acc.unwrap_or_else(|| ComplexMatrix::identity(dim)))
    }

    /// Evaluate the polynomial to a matrix (sum of weighted monomial
    /// products).
    pub fn evaluate(&self, vals: &[&ComplexMatrix]) -> CoreResult<ComplexMatrix> {
        let dim = self.check_assignment(vals)?;
        let mut out = ComplexMatrix::zeros(dim);
        for m in &self.monomials {
            let prod = self.monomial_product(m, vals, dim)?;
            out.add_assign_scaled(&prod, m.coeff);
        }
        Ok(out)
    }

    /// Trace of the evaluated polynomial.
    pub fn eval_trace(&self, vals: &[&ComplexMatrix]) -> CoreResult<Complex64> {
        let dim = self.check_assignment(vals)?;
        let mut out = Complex64::new(0.0, 0.0);
        for m in &self.monomials {
            out += m.coeff * self.monomial_product(m, vals, dim)?.trace();
        }
        Ok(out)
    }

    /// Analytic derivative of the traced polynomial with respect to one
    /// variable: for each occurrence of `var` in a monomial, the factors
    /// that follow the occurrence are rotated to the front so the
    /// remaining product sits to the right of the removed slot
    /// (`δTr(A z B z C)/δz = B z C A + C A z B`).
    pub fn derivative(&self, var: VarId) -> PolynomialModel {
        let mut out = PolynomialModel {
            vars: self.vars.clone(),
            monomials: Vec::new(),
        };
        for m in &self.monomials {
            for (pos, f) in m.factors.iter().enumerate() {
                if matches!(f, Factor::Var(v) if *v == var) {
                    let mut factors = Vec::with_capacity(m.factors.len() - 1);
                    factors.extend(m.factors[pos + 1..].iter().cloned());
                    factors.extend(m.factors[..pos].iter().cloned());
                    out.monomials.push(Monomial {
                        coeff: m.coeff,
                        factors,
                    });
                }
            }
        }
        out
    }

    /// Formal self-adjointness: the adjoint of every monomial is again a
    /// monomial of the model (up to cyclic rotation, which leaves the
    /// trace unchanged). Guarantees a real trace on Hermitian
    /// assignments with real coefficients. Models containing `General`
    /// variables cannot be certified and return `false`.
    pub fn is_self_adjoint(&self) -> bool {
        if self
            .monomials
            .iter()
            .flat_map(|m| m.factors.iter())
            .any(|f| matches!(f, Factor::Var(v) if self.var_class(*v) == AdjointClass::General))
        {
            return false;
        }

        let mut interner = ConstInterner::default();
        let mut direct = CanonicalSum::default();
        let mut adjoint = CanonicalSum::default();

        for m in &self.monomials {
            direct.add(canonicalize(m.coeff, &m.factors, &mut interner));

            // Formal adjoint: reverse order, conjugate the coefficient,
            // adjoint constants, flip sign per anti-Hermitian variable.
            let mut coeff = m.coeff.conj();
            let mut factors = Vec::with_capacity(m.factors.len());
            for f in m.factors.iter().rev() {
                match f {
                    Factor::Var(v) => {
                        if self.var_class(*v) == AdjointClass::AntiHermitian {
                            coeff = -coeff;
                        }
                        factors.push(f.clone());
                    }
                    Factor::Const { label, matrix } => {
                        factors.push(Factor::constant(label.clone(), matrix.adjoint()));
                    }
                }
            }
            adjoint.add(canonicalize(coeff, &factors, &mut interner));
        }

        direct.matches(&adjoint)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum FactorKey {
    Var(usize),
    Const(usize),
}

/// Interns constant matrices up to a scalar multiple: the pivot entry
/// (largest modulus, first by index on ties) is normalized to one and the
/// scalar folded into the monomial coefficient, so `C` and `−C†`-style
/// constants compare structurally.
#[derive(Default)]
struct ConstInterner {
    canon: Vec<ComplexMatrix>,
}

impl ConstInterner {
    fn intern(&mut self, matrix: &ComplexMatrix) -> (usize, Complex64) {
        let mut pivot = Complex64::new(0.0, 0.0);
        for z in matrix.entries() {
            if z.norm_sqr() > pivot.norm_sqr() * (1.0 + 1e-12) {
                pivot = *z;
            }
        }
        if pivot.norm_sqr() == 0.0 {
            // zero matrix: canonical as-is with scalar 0 handled by caller
            return (usize::MAX, Complex64::new(0.0, 0.0));
        }
        let canon = matrix.scale(pivot.inv());
        for (i, existing) in self.canon.iter().enumerate() {
            let tol = 1e-10 * existing.frobenius_norm().max(1.0);
            if existing.sub(&canon).frobenius_norm() <= tol {
                return (i, pivot);
            }
        }
        self.canon.push(canon);
        (self.canon.len() - 1, pivot)
    }
}

fn canonicalize(
    coeff: Complex64,
    factors: &[Factor],
    interner: &mut ConstInterner,
) -> (Vec<FactorKey>, Complex64) {
    let mut coeff = coeff;
    let mut keys = Vec::with_capacity(factors.len());
    for f in factors {
        match f {
            Factor::Var(VarId(i)) => keys.push(FactorKey::Var(*i)),
            Factor::Const { matrix, .. } => {
                let (id, scalar) = interner.intern(matrix);
                if id == usize::MAX {
                    coeff = Complex64::new(0.0, 0.0);
                }
                keys.push(FactorKey::Const(id));
                if scalar.norm_sqr() > 0.0 {
                    coeff *= scalar;
                }
            }
        }
    }
    // cyclic rotations leave the trace unchanged; pick the minimal one
    if !keys.is_empty() {
        let n = keys.len();
        let mut best = keys.clone();
        for shift in 1..n {
            let rotated: Vec<FactorKey> =
                (0..n).map(|k| keys[(k + shift) % n].clone()).collect();
            if rotated < best {
                best = rotated;
            }
        }
        keys = best;
    }
    (keys, coeff)
}

#[derive(Default)]
struct CanonicalSum {
    terms: Vec<(Vec<FactorKey>, Complex64)>,
}

impl CanonicalSum {
    fn add(&mut self, (key, coeff): (Vec<FactorKey>, Complex64)) {
        if let Some((_, c)) = self.terms.iter_mut().find(|(k, _)| *k == key) {
            *c += coeff;
        } else {
            self.terms.push((key, coeff));
        }
    }

    fn matches(&self, other: &CanonicalSum) -> bool {
        let scale = self
            .terms
            .iter()
            .chain(&other.terms)
            .map(|(_, c)| c.norm())
            .fold(1.0f64, f64::max);
        let tol = 1e-10 * scale;
        for (key, coeff) in &self.terms {
            let other_coeff = other
                .terms
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, c)| *c)
                .unwrap_or_default();
            if (coeff - other_coeff).norm() > tol {
                return false;
            }
        }
        for (key, coeff) in &other.terms {
            if !self.terms.iter().any(|(k, _)| k == key) && coeff.norm() > tol {
                return false;
            }
        }
        true
    }
}
