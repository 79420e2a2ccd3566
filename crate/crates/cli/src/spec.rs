//! Parsers for the short `kind:key=value,...` specs accepted on the command line.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;
use polab::channels::{
    attenuation_channel, complete_depolarizer, diattenuation_channel, identity_channel, kerr_unitary,
    lossless_polarizer_channel, rotation_channel, KrausChannel,
};
use polab::experiments::Params;
use polab::fock::constructors::{
    coherent_polarized, isotropic_poisson, noon_inspired, noon_state, su2_coherent, tetrahedron_state, tmsv_state,
    two_mode_coherent,
};
use polab::fock::operators::Mode;
use polab::fock::{FockBasis, FockState};
use polab::geometry::PolarAngles;
use polab::io::{self, Document};
use polab::linalg::C64;
use polab::Error;

use crate::Failure;

/// Truncation settings taken from the global flags.
pub struct Defaults {
    pub n_max: Option<usize>,
    pub threshold: f64,
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

pub fn parse_floats(text: &str, expected: usize, flag: &str) -> Result<Vec<f64>, Failure> {
    let values = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad(format!("{flag}: '{}' is not a number", t.trim()))))
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != expected {
        return Err(bad(format!("{flag}: expected {expected} numbers, got {}", values.len())));
    }
    Ok(values)
}

pub fn unit_axis(v: &[f64]) -> Result<Vector3<f64>, Failure> {
    let n = Vector3::new(v[0], v[1], v[2]);
    let norm = n.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(bad("axis must be a nonzero vector"));
    }
    Ok(n / norm)
}

/// `k=v,k=v` into a map of numbers.
pub fn parse_params(text: &str) -> Result<Params, Failure> {
    let mut out = Params::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| bad(format!("'{item}' is not of the form key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| bad(format!("value of {} is not a number", k.trim())))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// `name=start:stop:count`, inclusive of both ends.
pub fn parse_sweep(text: &str) -> Result<(String, Vec<f64>), Failure> {
    let (name, range) = text
        .split_once('=')
        .ok_or_else(|| bad("--sweep expects name=start:stop:count"))?;
    let parts: Vec<&str> = range.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad("--sweep expects name=start:stop:count"));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("--sweep: '{s}' is not a number")));
    let (a, b) = (num(a)?, num(b)?);
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| bad("--sweep: count must be a positive integer"))?;
    let values = match n {
        0 => return Err(bad("--sweep: count must be a positive integer")),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    };
    Ok((name.trim().to_string(), values))
}

/// A parsed `kind:key=value,...` spec with tracking of unused keys.
struct Spec {
    kind: String,
    values: BTreeMap<String, String>,
}

impl Spec {
    fn parse(text: &str) -> Result<Self, Failure> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut values = BTreeMap::new();
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("'{item}' is not of the form key=value")))?;
            values.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
        Ok(Self {
            kind: kind.trim().to_ascii_lowercase(),
            values,
        })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, Failure> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| bad(format!("{}: {key}='{v}' is not a number", self.kind))),
        }
    }

    fn f64_req(&mut self, key: &str) -> Result<f64, Failure> {
        match self.values.contains_key(key) {
            true => self.f64_or(key, 0.0),
            false => Err(bad(format!("{}: missing {key}=", self.kind))),
        }
    }

    fn usize_req(&mut self, key: &str) -> Result<usize, Failure> {
        let v = self.take(key).ok_or_else(|| bad(format!("{}: missing {key}=", self.kind)))?;
        v.parse()
            .map_err(|_| bad(format!("{}: {key}='{v}' is not a nonnegative integer", self.kind)))
    }

    fn angles(&mut self) -> Result<PolarAngles, Failure> {
        Ok(PolarAngles::new(self.f64_or("theta", 0.0)?, self.f64_or("phi", 0.0)?))
    }

    fn axis(&mut self) -> Result<Vector3<f64>, Failure> {
        let v = [self.f64_or("nx", 0.0)?, self.f64_or("ny", 0.0)?, self.f64_or("nz", 1.0)?];
        unit_axis(&v)
    }

    fn finish(self) -> Result<(), Failure> {
        match self.values.keys().next() {
            None => Ok(()),
            Some(k) => Err(bad(format!("{}: unknown key '{k}'", self.kind))),
        }
    }
}

/// Build a state from a spec. Without --n-max, states with unbounded photon
/// number are truncated just far enough to meet the leakage threshold.
pub fn parse_state(text: &str, d: &Defaults) -> Result<FockState, Failure> {
    let mut spec = Spec::parse(text)?;
    let th = d.threshold;
    type Build = Box<dyn Fn(FockBasis) -> polab::Result<FockState>>;
    let (min_n, build): (usize, Build) = match spec.kind.as_str() {
        "vacuum" => (0, Box::new(|b| Ok(FockState::vacuum(b)))),
        "fock" => {
            let (m, n) = (spec.usize_req("m")?, spec.usize_req("n")?);
            (m + n, Box::new(move |b| FockState::fock(b, m, n)))
        }
        "noon" => {
            let n = spec.usize_req("n")?;
            (n, Box::new(move |b| noon_state(n, b)))
        }
        "tetrahedron" => (4, Box::new(tetrahedron_state)),
        "su2-coherent" => {
            let n = spec.usize_req("n")?;
            let dir = spec.angles()?;
            (n, Box::new(move |b| su2_coherent(n, dir, b)))
        }
        "noon-inspired" => {
            let (m, n) = (spec.usize_req("m")?, spec.usize_req("n")?);
            let dir = spec.angles()?;
            (m.max(n), Box::new(move |b| noon_inspired(m, n, dir, b)))
        }
        "coherent" => {
            let alpha = C64::from_polar(spec.f64_req("alpha")?, spec.f64_or("arg", 0.0)?);
            let dir = spec.angles()?;
            (1, Box::new(move |b| coherent_polarized(alpha, dir, b, th)))
        }
        "two-mode-coherent" => {
            let a = C64::from_polar(spec.f64_req("a")?, spec.f64_or("arg_a", 0.0)?);
            let bb = C64::from_polar(spec.f64_req("b")?, spec.f64_or("arg_b", 0.0)?);
            (1, Box::new(move |b| two_mode_coherent(a, bb, b, th)))
        }
        "tmsv" => {
            let zeta = spec.f64_req("zeta")?;
            let phi = spec.f64_or("phi", 0.0)?;
            (2, Box::new(move |b| tmsv_state(zeta, phi, b, th)))
        }
        "isotropic" => {
            let mean = spec.f64_req("mean")?;
            (1, Box::new(move |b| isotropic_poisson(mean, b, th)))
        }
        other => {
            return Err(bad(format!(
                "unknown state '{other}'; try vacuum, fock, noon, tetrahedron, su2-coherent, noon-inspired, \
                 coherent, two-mode-coherent, tmsv or isotropic"
            )))
        }
    };
    spec.finish()?;
    if let Some(n_max) = d.n_max {
        return Ok(build(FockBasis::new(n_max))?);
    }
    let mut n_max = min_n;
    loop {
        match build(FockBasis::new(n_max)) {
            Err(Error::LeakageExceeded { required, .. }) if required > n_max && required <= 400 => n_max = required,
            Err(Error::LeakageExceeded { .. }) if n_max < 400 => n_max = (n_max * 2).max(n_max + 4),
            other => return Ok(other?),
        }
    }
}

/// Build a channel on `basis` from a spec or a kraus_channel JSON file.
pub fn parse_channel(text: &str, basis: FockBasis) -> Result<KrausChannel, Failure> {
    if text.ends_with(".json") || Path::new(text).is_file() {
        return match io::load(text)? {
            Document::Channel(ch) => Ok(ch),
            other => Err(bad(format!("expected a kraus_channel document, got {}", other.type_name()))),
        };
    }
    let mut spec = Spec::parse(text)?;
    let ch = match spec.kind.as_str() {
        "identity" => identity_channel(basis),
        "attenuation" => {
            let q = spec.f64_req("q")?;
            let mode = match spec.take("mode").as_deref().map(str::to_ascii_lowercase).as_deref() {
                None | Some("a") | Some("r") => Mode::A,
                Some("b") | Some("l") => Mode::B,
                Some(other) => return Err(bad(format!("attenuation: unknown mode '{other}'"))),
            };
            attenuation_channel(q, mode, basis)?
        }
        "diattenuation" => {
            let (q, r) = (spec.f64_req("q")?, spec.f64_req("r")?);
            diattenuation_channel(q, r, &spec.axis()?, basis)?
        }
        "rotation" => {
            let angle = spec.f64_req("angle")?;
            rotation_channel(angle, &spec.axis()?, basis)?
        }
        "depolarizer" => complete_depolarizer(basis),
        "polarizer" => lossless_polarizer_channel(spec.angles()?, basis),
        "kerr" => kerr_unitary(spec.f64_req("chi")?, basis),
        other => {
            return Err(bad(format!(
                "unknown channel '{other}'; try identity, attenuation, diattenuation, rotation, depolarizer, \
                 polarizer or kerr"
            )))
        }
    };
    spec.finish()?;
    Ok(ch)
}
