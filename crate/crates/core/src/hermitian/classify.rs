use std::collections::BTreeMap;
use std::fmt;

use super::{domega_residual, lee_covector, nabla_theta, HermitianStructure, ResidualMap};
use crate::error::{GeomError, Result};
use crate::ode::{loop_integral, Loop};
use crate::tensor::{Frame, FrameTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StructureKind {
    Kahler,
    Vaisman,
    GloballyConformallyKahler,
    StrictlyLckCandidate,
}

impl StructureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StructureKind::Kahler => "Kähler",
            StructureKind::Vaisman => "Vaisman",
            StructureKind::GloballyConformallyKahler => "gcK",
            StructureKind::StrictlyLckCandidate => "strictly-lcK-candidate",
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureClass {
    pub kind: StructureKind,
    /// Scale-free measurements behind the decision, maximised over samples.
    pub evidence: ResidualMap,
    /// `∮θ` for each supplied loop, by loop label.
    pub periods: BTreeMap<String, f64>,
}

/// Sorts an lcK structure into Kähler, Vaisman, gcK or strictly lcK using
/// the sampled points and the periods of θ over the supplied loops.
pub fn classify_structure(h: &HermitianStructure, samples: &[Vec<f64>], loops: &[Loop]) -> Result<StructureClass> {
    if samples.is_empty() {
        return Err(GeomError::Parameter("classification needs at least one sample point".into()));
    }
    let tol = h.chart().settings().tol;
    let mut theta_max: f64 = 0.0;
    let mut vaisman: f64 = 0.0;
    let mut closedness: f64 = 0.0;
    let mut lck: f64 = 0.0;
    for p in samples {
        let d = domega_residual(h, p)?;
        if d > 100.0 * tol.id {
            return Err(GeomError::NotLck { point: p.clone(), residual: d });
        }
        lck = lck.max(d);
        let frame = Frame::new(&h.chart().metric_checked(p)?, p)?;
        let theta = lee_covector(h, p)?;
        let nt = nabla_theta(h, p)?;
        let sq = theta.dot(&frame.sharp(&theta));
        theta_max = theta_max.max(theta.amax());
        let full = frame.bilinear_norm(&nt);
        let skew = frame.bilinear_norm(&(&nt - nt.transpose()));
        if sq > 0.0 {
            vaisman = vaisman.max(full / sq);
        }
        if sq + full > 0.0 {
            closedness = closedness.max(skew / (sq + full));
        }
    }

    let mut periods = BTreeMap::new();
    let theta_field = |q: &[f64]| Ok(FrameTensor::covector(&lee_covector(h, q)?, q));
    for lp in loops {
        periods.insert(lp.label().to_string(), loop_integral(h.chart(), &theta_field, lp)?);
    }
    let largest = periods.values().fold(0.0f64, |acc, v| acc.max(v.abs()));

    let mut evidence = ResidualMap::new();
    evidence.insert("theta_max".into(), theta_max);
    evidence.insert("nabla_theta_ratio".into(), vaisman);
    evidence.insert("dtheta_ratio".into(), closedness);
    evidence.insert("domega".into(), lck);
    evidence.insert("max_period".into(), largest);

    let closed = closedness < tol.id;
    let kind = if theta_max < tol.id {
        StructureKind::Kahler
    } else if vaisman < tol.id {
        if !closed {
            return Err(GeomError::Inconsistent(format!(
                "parallel Lee form with non-zero dθ (ratio {closedness:.3e})"
            )));
        }
        StructureKind::Vaisman
    } else if !closed {
        return Err(GeomError::Inconsistent(format!("Lee form is not closed (ratio {closedness:.3e})")));
    } else if largest < tol.ode {
        StructureKind::GloballyConformallyKahler
    } else if largest >= 10.0 * tol.ode {
        StructureKind::StrictlyLckCandidate
    } else {
        return Err(GeomError::Inconsistent(format!(
            "largest period {largest:.3e} lies between the exact and non-exact thresholds"
        )));
    };
    Ok(StructureClass { kind, evidence, periods })
}
