//! Explicit lcK manifolds on coordinate charts, each with its expected
//! classification.

mod bases;
mod calabi;
mod flat;
mod hopf;
mod profile;
mod warped;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::DVector;

pub use bases::KahlerBase;
pub use calabi::{calabi_ansatz, calabi_with_connection_scale, CalabiData};
pub use flat::flat_inversion;
pub use hopf::hopf;
pub use profile::ProfileFn;
pub use warped::warped_vaisman_gck;

use crate::chart::{Chart, VectorFn};
use crate::error::{GeomError, Result};
use crate::hermitian::{HermitianStructure, StructureKind};
use crate::holonomy::HolonomyClass;
use crate::ode::Loop;
use crate::settings::Settings;

#[derive(Clone)]
pub struct Expected {
    /// Kind of the primary structure `structures[0]`.
    pub kind: StructureKind,
    pub holonomy: HolonomyClass,
    /// Chart whose holonomy is classified.
    pub holonomy_chart: usize,
    /// Structures whose complex structures are the `J` candidates for `U(n)`.
    pub holonomy_j: Vec<usize>,
    /// Closed form of the Lee form of `structures[0]`.
    pub lee_form: Option<VectorFn>,
}

impl fmt::Debug for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Expected")
            .field("kind", &self.kind)
            .field("holonomy", &self.holonomy)
            .field("holonomy_chart", &self.holonomy_chart)
            .field("holonomy_j", &self.holonomy_j)
            .field("lee_form", &self.lee_form.is_some())
            .finish()
    }
}

#[derive(Clone)]
pub struct ZooEntry {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub charts: Vec<Chart>,
    pub structures: Vec<HermitianStructure>,
    pub loops: Vec<Loop>,
    pub expected: Expected,
    /// Einstein constant, when the primary chart is Einstein.
    pub einstein: Option<f64>,
    /// A parallel vector field on the primary chart.
    pub parallel_field: Option<VectorFn>,
    pub calabi: Option<CalabiData>,
}

impl fmt::Debug for ZooEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZooEntry")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("charts", &self.charts.iter().map(Chart::label).collect::<Vec<_>>())
            .field("structures", &self.structures)
            .field("loops", &self.loops.iter().map(Loop::label).collect::<Vec<_>>())
            .field("expected", &self.expected)
            .field("einstein", &self.einstein)
            .field("calabi", &self.calabi)
            .finish()
    }
}

impl ZooEntry {
    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.charts[0].dim() / 2
    }

    pub fn primary(&self) -> &HermitianStructure {
        &self.structures[0]
    }

    pub fn loop_by_label(&self, label: &str) -> Option<&Loop> {
        self.loops.iter().find(|l| l.label() == label)
    }

    pub fn lee_form_expected(&self, p: &[f64]) -> Option<DVector<f64>> {
        self.expected.lee_form.as_ref().map(|f| f(p))
    }

    /// Same entry with `settings` on every chart and structure.
    pub fn with_settings(mut self, settings: Settings) -> ZooEntry {
        self.charts = self.charts.into_iter().map(|c| c.with_settings(settings)).collect();
        let charts = self.charts.clone();
        self.structures = self
            .structures
            .iter()
            .map(|h| {
                let chart = charts
                    .iter()
                    .find(|c| c.label() == h.chart().label())
                    .cloned()
                    .unwrap_or_else(|| h.chart().clone().with_settings(settings));
                h.on_chart(h.label(), chart)
            })
            .collect();
        self
    }
}

/// A Kähler base as a zoo entry.
pub fn kaehler_base_entry(base: KahlerBase) -> Result<ZooEntry> {
    let structure = base.structure()?;
    let chart = structure.chart().clone();
    let center = DVector::from_vec(chart.domain().center());
    let small = Loop::circle("small-circle", center, 0, 1, 0.1, 200)?;
    let mut params = BTreeMap::new();
    if let KahlerBase::Sphere { r2, .. } = &base {
        params.insert("radius".into(), format!("{}", r2.sqrt()));
    }
    let holonomy = match base {
        KahlerBase::Flat { .. } => HolonomyClass::Reducible,
        KahlerBase::Sphere { .. } => HolonomyClass::Generic,
    };
    let m = chart.dim();
    Ok(ZooEntry {
        name: base.name(),
        params,
        charts: vec![chart],
        structures: vec![structure],
        loops: vec![small],
        expected: Expected {
            kind: StructureKind::Kahler,
            holonomy,
            holonomy_chart: 0,
            holonomy_j: vec![0],
            lee_form: Some(std::sync::Arc::new(move |_| DVector::zeros(m))),
        },
        einstein: match base {
            KahlerBase::Flat { .. } => Some(0.0),
            KahlerBase::Sphere { r2, .. } => Some(1.0 / r2),
        },
        parallel_field: None,
        calabi: None,
    })
}

/// Flat `ℂ`, flat `ℂ²` and `ℂP¹` with `Ω_N`-area `2π`.
pub fn kaehler_bases() -> Result<Vec<ZooEntry>> {
    [KahlerBase::flat(1), KahlerBase::flat(2), KahlerBase::cp1()].into_iter().map(kaehler_base_entry).collect()
}

/// A parsed selector `name{key=value,...}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Selector {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl Selector {
    pub fn parse(s: &str) -> Result<Selector> {
        let s = s.trim();
        let (name, body) = match s.find('{') {
            Some(i) => {
                let rest = &s[i + 1..];
                let body = rest
                    .strip_suffix('}')
                    .ok_or_else(|| GeomError::Selector(format!("unbalanced braces in `{s}`")))?;
                (&s[..i], body)
            }
            None => (s, ""),
        };
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(GeomError::Selector(format!("bad manifold name in `{s}`")));
        }
        let mut params = BTreeMap::new();
        for part in split_top_level(body).into_iter().map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| GeomError::Selector(format!("parameter `{part}` is not key=value")))?;
            if params.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(GeomError::Selector(format!("parameter `{}` given twice", k.trim())));
            }
        }
        Ok(Selector { name: name.to_string(), params })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.params.remove(key)
    }

    fn real(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            Some(v) => parse_real(&v),
            None => Ok(default),
        }
    }

    fn int(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            Some(v) => v.parse().map_err(|_| GeomError::Selector(format!("`{key}` must be a non-negative integer, got `{v}`"))),
            None => Ok(default),
        }
    }

    fn finish(self) -> Result<()> {
        match self.params.keys().next() {
            Some(k) => Err(GeomError::Selector(format!("unknown parameter `{k}` for `{}`", self.name))),
            None => Ok(()),
        }
    }
}

/// Splits on commas outside nested braces.
fn split_top_level(body: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in body.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&body[start..]);
    parts
}

/// Reals with `pi` allowed: `1.5`, `pi`, `2pi`, `2*pi`, `pi/2`, `-pi/4`.
pub fn parse_real(s: &str) -> Result<f64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || GeomError::Selector(format!("cannot read `{s}` as a number"));
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, b.parse::<f64>().map_err(|_| bad())?),
        None => (t.as_str(), 1.0),
    };
    let (sign, num) = match num.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, num),
    };
    let coeff = num.strip_suffix("pi").ok_or_else(bad)?;
    let coeff = coeff.strip_suffix('*').unwrap_or(coeff);
    let c = if coeff.is_empty() { 1.0 } else { coeff.parse::<f64>().map_err(|_| bad())? };
    Ok(sign * c * PI / den)
}

fn base_from(sel: &mut Selector, default: &str) -> Result<KahlerBase> {
    let name = sel.take("base").unwrap_or_else(|| default.to_string());
    if let Some(r) = name.strip_prefix("sphere") {
        let mut inner = Selector::parse(&format!("sphere{r}"))?;
        let radius = inner.real("radius", 1.0)?;
        inner.finish()?;
        return KahlerBase::sphere(radius);
    }
    KahlerBase::by_name(&name)
}

/// Builds the zoo entry named by `selector`.
pub fn resolve(selector: &str) -> Result<ZooEntry> {
    let mut sel = Selector::parse(selector)?;
    let entry = match sel.name.as_str() {
        "hopf" => {
            let n = sel.int("n", 2)?;
            let c = sel.real("circumference", 2.0 * PI)?;
            sel.finish()?;
            hopf(n, c)?
        }
        "flat_inversion" => {
            let n = sel.int("n", 2)?;
            sel.finish()?;
            flat_inversion(n)?
        }
        "warped" => {
            let c = ProfileFn::named(&sel.take("c").unwrap_or_else(|| "sin".into()))?;
            let base = base_from(&mut sel, "cp1")?;
            sel.finish()?;
            warped_vaisman_gck(c, base)?
        }
        "calabi" => {
            let ell = ProfileFn::named(&sel.take("ell").unwrap_or_else(|| "sin".into()))?;
            let b = sel.real("b", PI)?;
            let base = base_from(&mut sel, "cp1")?;
            sel.finish()?;
            calabi_ansatz(ell, b, base)?
        }
        "flat_c" | "flat_c2" | "cp1" => {
            let name = sel.name.clone();
            sel.finish()?;
            kaehler_base_entry(KahlerBase::by_name(&name)?)?
        }
        "sphere" => {
            let r = sel.real("radius", 1.0)?;
            sel.finish()?;
            kaehler_base_entry(KahlerBase::sphere(r)?)?
        }
        other => return Err(GeomError::Selector(format!("unknown manifold `{other}`"))),
    };
    Ok(entry)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_with_pi() {
        assert_eq!(parse_real("1.5").unwrap(), 1.5);
        assert!((parse_real("2pi").unwrap() - 2.0 * PI).abs() < 1e-15);
        assert!((parse_real("2*pi").unwrap() - 2.0 * PI).abs() < 1e-15);
        assert!((parse_real("pi/2").unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((parse_real("-pi/4").unwrap() + PI / 4.0).abs() < 1e-15);
        assert!(parse_real("tau").is_err());
    }

    #[test]
    fn selector_parsing() {
        let s = Selector::parse("hopf{n=3, circumference=2pi}").unwrap();
        assert_eq!(s.name, "hopf");
        assert_eq!(s.params["n"], "3");
        assert!(Selector::parse("hopf{n=3").is_err());
        assert!(Selector::parse("hopf{n}").is_err());
    }

    #[test]
    fn resolve_rejects_unknown_names_and_keys() {
        assert!(matches!(resolve("klein_bottle"), Err(GeomError::Selector(_))));
        assert!(matches!(resolve("hopf{m=2}"), Err(GeomError::Selector(_))));
        assert!(matches!(resolve("hopf{n=1}"), Err(GeomError::Parameter(_))));
    }

    #[test]
    fn nested_sphere_base() {
        let e = resolve("warped{c=sin,base=sphere{radius=2}}").unwrap();
        assert_eq!(e.params["base"], "sphere{radius=2}");
    }
}
