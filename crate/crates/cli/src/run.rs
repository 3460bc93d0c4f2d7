use std::time::Instant;

use lck_core::hermitian::{
    average_metric_residuals, classify_structure, commuting_pair_residuals, curvature_j_residuals,
    delta_omega_residual, domega_residual, einstein_chain_residuals, hamiltonian_form_residual, lee_covector,
    nabla_j_residual, parallel_field_residuals, Potential,
};
use lck_core::holonomy::{
    classified, coordinate_probes, curvature_span, lasso_loops, loop_holonomy, HolonomyClass, HolonomyEstimate,
};
use lck_core::tensor::Frame;
use lck_core::zoo::CalabiData;
use lck_core::{resolve, Chart, GeomError, ZooEntry};
use nalgebra::DVector;
use rayon::prelude::*;

use crate::config::{Suite, SuiteConfig};
use crate::error::CliError;
use crate::report::{Accumulator, Classification, EstimateReport, Report, Status, SuiteReport};

const POTENTIAL_PANELS: usize = 64;
const HOLONOMY_PROBES: usize = 4;
const LASSOS: usize = 3;
const LASSO_SIDE: f64 = 0.05;

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub parallel: bool,
    pub timing: bool,
}

/// Deterministic test direction number `k` in dimension `m`.
pub fn probe_vector(m: usize, k: usize) -> DVector<f64> {
    DVector::from_fn(m, |i, _| ((i * 7 + k * 13 + 1) as f64 * 0.618_033_988_7).fract() - 0.5)
}

type Sample = Vec<(String, f64, f64)>;

struct Ctx<'a> {
    entry: &'a ZooEntry,
    config: &'a SuiteConfig,
    options: RunOptions,
}

impl Ctx<'_> {
    fn points(&self, chart: &Chart) -> Result<Vec<Vec<f64>>, CliError> {
        match &self.config.at {
            Some(p) if p.len() != chart.dim() => Err(CliError::Config(format!(
                "--at has {} coordinates but chart `{}` has dimension {}",
                p.len(),
                chart.label(),
                chart.dim()
            ))),
            Some(p) => Ok(vec![p.clone()]),
            None => Ok(chart.sample_points(self.config.samples, self.config.seed)),
        }
    }

    /// Evaluates `f` at every sample of `chart` and folds the residuals in
    /// sample order, so the outcome does not depend on scheduling.
    fn sampled<F>(&self, suite: Suite, chart: &Chart, f: F) -> Result<SuiteReport, CliError>
    where
        F: Fn(usize, &[f64]) -> lck_core::Result<Sample> + Sync,
    {
        let points = self.points(chart)?;
        let results: Vec<_> = if self.options.parallel {
            points.par_iter().enumerate().map(|(k, p)| f(k, p)).collect()
        } else {
            points.iter().enumerate().map(|(k, p)| f(k, p)).collect()
        };
        let mut acc = Accumulator::default();
        let mut singular = 0;
        for (p, r) in points.iter().zip(results) {
            match r {
                Ok(values) => {
                    for (name, v, tol) in values {
                        acc.record(&name, v, tol, p);
                    }
                }
                Err(GeomError::Singular { .. }) => singular += 1,
                Err(e) => return Ok(SuiteReport::error(suite, format!("at {p:?}: {e}"))),
            }
        }
        let residuals = acc.finish();
        let status = if residuals.values().all(|r| r.pass) { Status::Pass } else { Status::Fail };
        let mut report = SuiteReport::new(suite, status);
        report.residuals = residuals;
        report.singular_skipped = singular;
        if report.residuals.is_empty() && singular > 0 {
            report = report.with_status(Status::Fail);
            report.note = Some("every sample lies on the singular locus".into());
        }
        Ok(report)
    }

    fn tol_id(&self) -> f64 {
        self.config.tol_id
    }

    fn tol_chain(&self) -> f64 {
        self.config.tol_chain
    }

    fn lck_identities(&self) -> Result<SuiteReport, CliError> {
        let e = self.entry;
        if e.n() < 2 {
            return Ok(SuiteReport::not_applicable(Suite::LckIdentities, "Lee form needs complex dimension at least 2"));
        }
        let h = e.primary();
        let chart = h.chart();
        let m = chart.dim();
        let tol = self.tol_id();
        self.sampled(Suite::LckIdentities, chart, |k, p| {
            let x = probe_vector(m, k);
            let y = probe_vector(m, k + 1000);
            let theta = lee_covector(h, p)?;
            let (full, contracted) = curvature_j_residuals(h, p, &x, &y)?;
            let mut out = vec![
                ("nablaJ".to_string(), nabla_j_residual(h, p, &x)?, tol),
                ("dOmega".to_string(), domega_residual(h, p)?, tol),
                ("deltaOmega".to_string(), delta_omega_residual(h, p, &theta)?, tol),
                ("RJ".to_string(), full, tol),
                ("RJcontr".to_string(), contracted, tol),
            ];
            if let Some(expected) = e.lee_form_expected(p) {
                let frame = Frame::new(&chart.metric_checked(p)?, p)?;
                let scale = frame.covector_norm(&expected).max(1.0);
                out.push(("theta-closed-form".to_string(), frame.covector_norm(&(theta - expected)) / scale, tol));
            }
            Ok(out)
        })
    }

    fn einstein_chain(&self) -> Result<SuiteReport, CliError> {
        let e = self.entry;
        let Some(lambda) = e.einstein else {
            return Ok(SuiteReport::not_applicable(Suite::EinsteinChain, "metric is not declared Einstein"));
        };
        if e.n() < 2 {
            return Ok(SuiteReport::not_applicable(Suite::EinsteinChain, "Lee form needs complex dimension at least 2"));
        }
        let h = e.primary();
        let tol = self.tol_chain();
        self.sampled(Suite::EinsteinChain, h.chart(), |_, p| {
            Ok(einstein_chain_residuals(h, p, lambda)?.into_iter().map(|(k, v)| (k, v, tol)).collect())
        })
    }

    fn parallel_field(&self) -> Result<SuiteReport, CliError> {
        let e = self.entry;
        let Some(field) = &e.parallel_field else {
            return Ok(SuiteReport::not_applicable(Suite::ParallelField, "no parallel vector field declared"));
        };
        let h = e.primary();
        let tol = self.tol_id();
        let v = |q: &[f64]| Ok(field(q));
        let center = h.chart().domain().center();
        let a0 = match parallel_field_residuals(h, &center, &v) {
            Ok(rep) => rep.a,
            Err(err) => return Ok(SuiteReport::error(Suite::ParallelField, format!("at {center:?}: {err}"))),
        };
        self.sampled(Suite::ParallelField, h.chart(), |_, p| {
            let rep = parallel_field_residuals(h, p, &v)?;
            let mut out: Sample = rep.residuals.into_iter().map(|(k, r)| (k, r, tol)).collect();
            out.push(("a-constant".to_string(), (rep.a - a0).abs() / a0.abs().max(1.0), tol));
            Ok(out)
        })
    }

    fn calabi(&self) -> Option<&CalabiData> {
        self.entry.calabi.as_ref()
    }

    fn potential(&self, data: &CalabiData) -> Result<Potential, CliError> {
        Ok(Potential::new(&self.entry.structures[CalabiData::PLUS_MINUS], &data.potential_base, POTENTIAL_PANELS)?)
    }

    fn commuting_pair(&self) -> Result<SuiteReport, CliError> {
        if self.calabi().is_none() {
            return Ok(SuiteReport::not_applicable(Suite::CommutingPair, "no commuting pair of complex structures"));
        }
        let e = self.entry;
        let gplus = &e.charts[CalabiData::G_PLUS];
        let (i, j) = (&e.structures[CalabiData::PLUS_PLUS], &e.structures[CalabiData::PLUS_MINUS]);
        let tol = self.tol_id();
        self.sampled(Suite::CommutingPair, gplus, |_, p| {
            Ok(commuting_pair_residuals(gplus, i, j, p)?.into_iter().map(|(k, v)| (k, v, tol)).collect())
        })
    }

    fn hamiltonian_form(&self) -> Result<SuiteReport, CliError> {
        let Some(data) = self.calabi() else {
            return Ok(SuiteReport::not_applicable(Suite::HamiltonianForm, "no commuting pair of complex structures"));
        };
        let e = self.entry;
        let gplus = &e.charts[CalabiData::G_PLUS];
        let (i, j) = (&e.structures[CalabiData::PLUS_PLUS], &e.structures[CalabiData::PLUS_MINUS]);
        let potential = self.potential(data)?;
        let tol = self.tol_chain();
        let m = gplus.dim();
        self.sampled(Suite::HamiltonianForm, gplus, |k, p| {
            let r = hamiltonian_form_residual(gplus, i, j, &potential, p, &probe_vector(m, k))?;
            Ok(vec![("tilom".to_string(), r, tol)])
        })
    }

    fn average_metric(&self) -> Result<SuiteReport, CliError> {
        let Some(data) = self.calabi() else {
            return Ok(SuiteReport::not_applicable(Suite::AverageMetric, "no commuting pair of complex structures"));
        };
        let e = self.entry;
        let g0 = &e.charts[CalabiData::G_ZERO];
        let i0 = &e.structures[CalabiData::ELL_PLUS];
        let potential = self.potential(data)?;
        let tol = self.tol_id();
        self.sampled(Suite::AverageMetric, g0, |_, p| {
            let rep = average_metric_residuals(g0, i0, &potential, p)?;
            Ok(rep.residuals.into_iter().map(|(k, v)| (k, v, tol)).collect())
        })
    }

    fn holonomy(&self) -> Result<SuiteReport, CliError> {
        let e = self.entry;
        let chart = &e.charts[e.expected.holonomy_chart];
        let base = match &self.config.at {
            Some(_) => self.points(chart)?.remove(0),
            None => chart.domain().center(),
        };
        let js: Vec<_> = e.expected.holonomy_j.iter().map(|&i| e.structures[i].j(&base)).collect();
        let seed = self.config.seed;
        let n = e.n();
        let estimates = curvature_span(chart, &base, &coordinate_probes(chart, HOLONOMY_PROBES, seed)).and_then(|span| {
            let loops = lasso_loops(chart, &base, LASSOS, LASSO_SIDE, seed)?;
            Ok((span, loop_holonomy(chart, &loops, &base)?))
        });
        let (span, lo) = match estimates {
            Ok((span, lo)) => (classified(span, n, &js), classified(lo, n, &js)),
            Err(err @ GeomError::LoopTooLarge { .. }) => {
                let mut r = SuiteReport::new(Suite::Holonomy, Status::Inconclusive);
                r.note = Some(err.to_string());
                return Ok(r);
            }
            Err(err) => return Ok(SuiteReport::error(Suite::Holonomy, err.to_string())),
        };

        let mut acc = Accumulator::default();
        acc.record("skew-curvature-span", span.skewness_defect(), self.tol_id(), &base);
        acc.record("skew-loops", lo.skewness_defect(), self.tol_id(), &base);
        let residuals = acc.finish();

        let expected = e.expected.holonomy;
        let status = if !span.classification.is_decided() || !lo.classification.is_decided() {
            Status::Inconclusive
        } else if span.classification == expected
            && lo.classification == expected
            && span.algebra_dim == lo.algebra_dim
            && residuals.values().all(|r| r.pass)
        {
            Status::Pass
        } else {
            Status::Fail
        };
        let mut report = SuiteReport::new(Suite::Holonomy, status);
        report.residuals = residuals;
        report.classification = Some(Classification::Holonomy {
            restricted: true,
            chart: chart.label().to_string(),
            base,
            expected: expected.label(n),
            curvature_span: estimate_report(&span, n),
            loops: estimate_report(&lo, n),
        });
        Ok(report)
    }

    fn classify(&self) -> Result<SuiteReport, CliError> {
        let e = self.entry;
        if e.n() < 2 {
            return Ok(SuiteReport::not_applicable(Suite::Classify, "Lee form needs complex dimension at least 2"));
        }
        let h = e.primary();
        let points = self.points(h.chart())?;
        let class = match classify_structure(h, &points, &e.loops) {
            Ok(c) => c,
            Err(err) => return Ok(SuiteReport::error(Suite::Classify, err.to_string())),
        };
        let status = if class.kind == e.expected.kind { Status::Pass } else { Status::Fail };
        let mut report = SuiteReport::new(Suite::Classify, status);
        report.classification = Some(Classification::Structure {
            kind: class.kind.to_string(),
            expected: e.expected.kind.to_string(),
            evidence: class.evidence,
            periods: class.periods,
        });
        Ok(report)
    }

    fn suite(&self, suite: Suite) -> Result<SuiteReport, CliError> {
        let start = Instant::now();
        let mut report = match suite {
            Suite::LckIdentities => self.lck_identities(),
            Suite::EinsteinChain => self.einstein_chain(),
            Suite::ParallelField => self.parallel_field(),
            Suite::CommutingPair => self.commuting_pair(),
            Suite::HamiltonianForm => self.hamiltonian_form(),
            Suite::AverageMetric => self.average_metric(),
            Suite::Holonomy => self.holonomy(),
            Suite::Classify => self.classify(),
        }?;
        if self.options.timing {
            report.wall_time_s = Some(start.elapsed().as_secs_f64());
        }
        Ok(report)
    }
}

fn estimate_report(est: &HolonomyEstimate, n: usize) -> EstimateReport {
    EstimateReport {
        algebra_dim: est.algebra_dim,
        label: est.classification.label(n),
        class: match est.classification {
            HolonomyClass::Generic => "generic",
            HolonomyClass::OddOrthogonal => "odd-orthogonal",
            HolonomyClass::Unitary => "unitary",
            HolonomyClass::Reducible => "reducible",
            HolonomyClass::Inconclusive => "inconclusive",
        }
        .to_string(),
        rank_gap: est.rank_gap,
        confident: est.is_confident(),
        fixed_vectors: est.fixed_vectors().len(),
    }
}

/// Resolves the manifold and runs the configured suites in order.
pub fn run(config: &SuiteConfig, options: RunOptions) -> Result<Report, CliError> {
    let start = Instant::now();
    config.validate()?;
    let entry = resolve(&config.manifold)?.with_settings(config.settings());
    let ctx = Ctx { entry: &entry, config, options };
    let suites = config.suites.iter().map(|&s| ctx.suite(s)).collect::<Result<Vec<_>, _>>()?;
    let mut report = Report::new(config.clone(), suites);
    if options.timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}
