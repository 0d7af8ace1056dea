//! Shift-invariance (Ward) residuals.
//!
//! For a confining weight `ρ ∝ exp(L)` the phase-space measure is
//! invariant under constant Hermitian shifts of any dynamical variable,
//! so integration by parts gives the exact identity
//! `⟨ δTrW/δz + TrW · δL/δz ⟩ = 0` entrywise for every polynomial `W`.
//! The estimator below checks each real component of that matrix against
//! its own Monte Carlo error.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, CoreResult};
use crate::matcore::{Factor, PolynomialModel};
use crate::tracedyn::{PhasePoint, TraceHamiltonian};

use super::config::EnsembleConfig;
use super::sampler::{log_weight_model, metropolis_sample, SampleAccumulator, SamplerReport};
use super::stats::MatrixBatch;

/// A named polynomial test function together with the variable whose
/// shift invariance it probes.
#[derive(Debug, Clone)]
pub struct WardTest {
    pub name: String,
    pub model: PolynomialModel,
    pub var: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentPart {
    Re,
    Im,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WardComponent {
    pub row: usize,
    pub col: usize,
    pub part: ComponentPart,
    pub mean: f64,
    pub se: f64,
    /// `mean / se`; zero when the component is identically zero.
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WardReport {
    pub test_function: String,
    pub var: String,
    pub components: Vec<WardComponent>,
    pub pass: bool,
    pub max_abs_z: f64,
    pub n_samples: usize,
    /// Canonical symplectic pairing of the sampled variables, recorded
    /// as metadata for downstream consumers.
    pub pairing: Vec<(String, String)>,
}

struct WardAccum<'m> {
    dl: &'m PolynomialModel,
    tests: &'m [(PolynomialModel, WardTest)], // (dW, test)
    h: &'m TraceHamiltonian,
    batches: Vec<MatrixBatch>,
}

impl SampleAccumulator for WardAccum<'_> {
    fn observe(&mut self, z: &PhasePoint) {
        let at = self.h.assignment(z);
        let dl = self.dl.evaluate(&at).expect("log-weight gradient");
        for ((dw, test), batch) in self.tests.iter().zip(&mut self.batches) {
            let trw = test.model.eval_trace(&at).expect("test function trace");
            let mut residual = dw.evaluate(&at).expect("test function gradient");
            residual.add_assign_scaled(&dl, trw);
            batch.observe(&residual);
        }
    }

    fn merge(&mut self, other: Self) {
        for (a, b) in self.batches.iter_mut().zip(other.batches) {
            a.merge(b);
        }
    }
}

/// Estimate all Ward residuals over one shared sampling run.
pub fn ward_residuals(
    h: &TraceHamiltonian,
    cfg: &EnsembleConfig,
    tests: &[WardTest],
) -> CoreResult<(Vec<WardReport>, SamplerReport)> {
    if !h.is_confining() {
        return Err(CoreError::UnsupportedModel(format!(
            "`{}` is not confining; boundary terms spoil the shift identity",
            h.label()
        )));
    }
    let log_rho = log_weight_model(h, cfg)?;
    let mut prepared = Vec::with_capacity(tests.len());
    for t in tests {
        let var = t
            .model
            .var_id(&t.var)
            .ok_or_else(|| CoreError::UnknownVariable(t.var.clone()))?;
        if log_rho.var_id(&t.var).is_none() {
            return Err(CoreError::UnknownVariable(t.var.clone()));
        }
        prepared.push((t.model.derivative(var), t.clone()));
    }

    // δL/δvar is shared by all tests probing the same variable; group so
    // each accumulator evaluates it once per sample
    let dim = cfg.dim();
    let batch_len = ((cfg.per_chain_samples() as f64).sqrt().ceil() as usize).max(1);

    let mut reports = Vec::with_capacity(tests.len());
    let mut last_report: Option<SamplerReport> = None;
    let mut unique_vars: Vec<&str> = Vec::new();
    for t in tests {
        if !unique_vars.contains(&t.var.as_str()) {
            unique_vars.push(&t.var);
        }
    }

    for var in unique_vars {
        let group: Vec<(PolynomialModel, WardTest)> = prepared
            .iter()
            .filter(|(_, t)| t.var == var)
            .cloned()
            .collect();
        let dl = log_rho.derivative(log_rho.var_id(var).unwrap());
        let (accum, report) = metropolis_sample(h, cfg, || WardAccum {
            dl: &dl,
            tests: &group,
            h,
            batches: group
                .iter()
                .map(|_| MatrixBatch::new(dim, batch_len))
                .collect(),
        })?;
        for ((_, test), batch) in group.iter().zip(&accum.batches) {
            reports.push(report_from_batch(h, test, batch));
        }
        last_report = Some(report);
    }
    // restore input order
    reports.sort_by_key(|r| {
        tests
            .iter()
            .position(|t| t.name == r.test_function && t.var == r.var)
            .unwrap_or(usize::MAX)
    });
    Ok((reports, last_report.expect("at least one test")))
}

fn report_from_batch(h: &TraceHamiltonian, test: &WardTest, batch: &MatrixBatch) -> WardReport {
    let stats = batch.stats();
    let dim = stats.mean.dim();
    let mut components = Vec::with_capacity(2 * dim * dim);
    let mut max_abs_z = 0.0f64;
    let mut pass = true;
    for row in 0..dim {
        for col in 0..dim {
            let k = row * dim + col;
            let entry = stats.mean[(row, col)];
            for (part, mean, se) in [
                (ComponentPart::Re, entry.re, stats.se_re[k]),
                (ComponentPart::Im, entry.im, stats.se_im[k]),
            ] {
                let z_score = if se > 0.0 {
                    mean / se
                } else if mean == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                max_abs_z = max_abs_z.max(z_score.abs());
                if z_score.abs() > 3.0 {
                    pass = false;
                }
                components.push(WardComponent {
                    row,
                    col,
                    part,
                    mean,
                    se,
                    z_score,
                });
            }
        }
    }
    WardReport {
        test_function: test.name.clone(),
        var: test.var.clone(),
        components,
        pass,
        max_abs_z,
        n_samples: stats.n,
        pairing: (0..h.dofs())
            .map(|r| (h.q_name(r).to_string(), h.p_name(r).to_string()))
            .collect(),
    }
}

/// Single-test convenience wrapper.
pub fn ward_residual(
    h: &TraceHamiltonian,
    cfg: &EnsembleConfig,
    w: &PolynomialModel,
    var: &str,
) -> CoreResult<WardReport> {
    let tests = vec![WardTest {
        name: "custom".into(),
        model: w.clone(),
        var: var.to_string(),
    }];
    let (mut reports, _) = ward_residuals(h, cfg, &tests)?;
    Ok(reports.remove(0))
}

/// The three standard test functions over a model's first dof:
/// `Tr q²` and `Tr q⁴` probed against `q`, `Tr(qp + pq)` against `p`.
pub fn standard_test_functions(h: &TraceHamiltonian) -> Vec<WardTest> {
    let qn = h.q_name(0).to_string();
    let pn = h.p_name(0).to_string();

    let fresh = |build: &dyn Fn(&mut PolynomialModel)| {
        let mut m = PolynomialModel::new();
        for name in h.model().var_names() {
            let class = h.model().var_class(h.model().var_id(name).unwrap());
            m.declare_var(name, class);
        }
        build(&mut m);
        m
    };

    let q2 = fresh(&|m: &mut PolynomialModel| {
        let q = m.var_id(&qn).unwrap();
        m.add_term_re(1.0, vec![Factor::var(q), Factor::var(q)]);
    });
    let qp_sym = fresh(&|m: &mut PolynomialModel| {
        let q = m.var_id(&qn).unwrap();
        let p = m.var_id(&pn).unwrap();
        m.add_term_re(1.0, vec![Factor::var(q), Factor::var(p)]);
        m.add_term_re(1.0, vec![Factor::var(p), Factor::var(q)]);
    });
    let q4 = fresh(&|m: &mut PolynomialModel| {
        let q = m.var_id(&qn).unwrap();
        m.add_term_re(1.0, vec![Factor::var(q); 4]);
    });

    vec![
        WardTest {
            name: "tr_q2".into(),
            model: q2,
            var: qn.clone(),
        },
        WardTest {
            name: "tr_qp_sym".into(),
            model: qp_sym,
            var: pn,
        },
        WardTest {
            name: "tr_q4".into(),
            model: q4,
            var: qn,
        },
    ]
}

/// Scalar test function `Tr z` for the 1×1 Gaussian control.
pub fn scalar_test_function(h: &TraceHamiltonian) -> WardTest {
    let mut m = PolynomialModel::new();
    for name in h.model().var_names() {
        let class = h.model().var_class(h.model().var_id(name).unwrap());
        m.declare_var(name, class);
    }
    let q = m.var_id(h.q_name(0)).unwrap();
    m.add_term_re(1.0, vec![Factor::var(q)]);
    WardTest {
        name: "tr_z".into(),
        model: m,
        var: h.q_name(0).to_string(),
    }
}
