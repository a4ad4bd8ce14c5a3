//! Feed-forward interferometer networks.
//!
//! A network is a directed acyclic graph of optical elements (beamsplitters
//! and phase rotators) between named source ports and detector ports. Ports
//! are global names: a port is produced exactly once (by a source or an
//! element output) and consumed at most once (by an element input or a
//! detector). `resolve` rewrites any port's annihilation operator as a
//! complex-linear combination of source-mode operators.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{ModeId, OperatorPoly, Sideband, C64, ISOMETRY_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("port {0} is not produced by any source or element")]
    UnknownPort(String),
    #[error("cyclic wiring detected at port {0}")]
    CyclicWiring(String),
    #[error("no detector named {0}")]
    UnknownDetector(String),
    #[error("network is invalid: {0}")]
    Invalid(String),
}

/// Sign convention of a 50:50 (or general r/t) beamsplitter. The standard
/// readout layouts use three distinct sign patterns, selected per element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsOrientation {
    /// `out1 = t·in1 + r·in2`, `out2 = r·in1 - t·in2`
    MinusSecondInput,
    /// `out1 = t·in1 - r·in2`, `out2 = r·in1 + t·in2`
    MinusSecondInputSwapped,
    /// `out1 = t·in1 + r·in2`, `out2 = -r·in1 + t·in2`
    MinusFirstInput,
}

impl fmt::Display for BsOrientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BsOrientation::MinusSecondInput => "sum-diff",
            BsOrientation::MinusSecondInputSwapped => "diff-sum",
            BsOrientation::MinusFirstInput => "sum-negdiff",
        };
        write!(f, "{s}")
    }
}

impl BsOrientation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sum-diff" => Some(BsOrientation::MinusSecondInput),
            "diff-sum" => Some(BsOrientation::MinusSecondInputSwapped),
            "sum-negdiff" => Some(BsOrientation::MinusFirstInput),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    BeamSplitter {
        r: f64,
        t: f64,
        orientation: BsOrientation,
    },
    PhaseRotator {
        phi: f64,
    },
}

impl ElementKind {
    pub fn beamsplitter_50_50(orientation: BsOrientation) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ElementKind::BeamSplitter {
            r: s,
            t: s,
            orientation,
        }
    }

    pub fn arity(&self) -> (usize, usize) {
        match self {
            ElementKind::BeamSplitter { .. } => (2, 2),
            ElementKind::PhaseRotator { .. } => (1, 1),
        }
    }

    /// The element's linear map on annihilation operators, row-major:
    /// `out_k = Σ_j matrix[k][j] · in_j`.
    pub fn matrix(&self) -> Vec<Vec<C64>> {
        match self {
            ElementKind::BeamSplitter { r, t, orientation } => {
                let (r, t) = (C64::new(*r, 0.0), C64::new(*t, 0.0));
                match orientation {
                    BsOrientation::MinusSecondInput => vec![vec![t, r], vec![r, -t]],
                    BsOrientation::MinusSecondInputSwapped => vec![vec![t, -r], vec![r, t]],
                    BsOrientation::MinusFirstInput => vec![vec![t, r], vec![-r, t]],
                }
            }
            ElementKind::PhaseRotator { phi } => {
                vec![vec![Complex64::from_polar(1.0, *phi)]]
            }
        }
    }

    /// Max deviation of `M M†` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.matrix();
        let n = m.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut dot = C64::new(0.0, 0.0);
                for k in 0..n {
                    dot += m[i][k] * m[j][k].conj();
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - C64::new(expected, 0.0)).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

/// A named violation found by `validate`; validation collects all of them
/// instead of aborting on the first.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Violation {
    #[error("non-unitary element {name} (defect {defect:.3e})")]
    NonUnitaryElement { name: String, defect: f64 },
    #[error("element {name} has wrong port arity")]
    BadArity { name: String },
    #[error("port fan-in: {port} produced more than once")]
    PortFanIn { port: String },
    #[error("port fan-out: {port} consumed more than once")]
    PortFanOut { port: String },
    #[error("port {port} referenced but never produced")]
    DanglingPort { port: String },
    #[error("cyclic wiring involving element {name}")]
    Cycle { name: String },
    #[error("detector {name} unreachable from sources")]
    UnreachableDetector { name: String },
    #[error("source-to-detector map is not an isometry (defect {defect:.3e})")]
    NonIsometricGlobalMap { defect: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Producer {
    Source(usize),
    Output { element: usize, slot: usize },
}

#[derive(Debug, Clone)]
pub struct Network {
    elements: Vec<Element>,
    /// Source port names; the port name is the source mode label.
    sources: Vec<String>,
    /// Detector name -> port watched.
    detectors: BTreeMap<String, String>,
}

impl Network {
    pub fn new(
        elements: Vec<Element>,
        sources: Vec<String>,
        detectors: BTreeMap<String, String>,
    ) -> Self {
        Network {
            elements,
            sources,
            detectors,
        }
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn source_modes(&self) -> Vec<ModeId> {
        self.sources.iter().map(ModeId::single).collect()
    }

    pub fn detectors(&self) -> impl Iterator<Item = (&String, &String)> {
        self.detectors.iter()
    }

    pub fn detector_names(&self) -> Vec<String> {
        self.detectors.keys().cloned().collect()
    }

    pub fn detector_port(&self, name: &str) -> Result<&str, NetworkError> {
        self.detectors
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| NetworkError::UnknownDetector(name.to_string()))
    }

    fn producers(&self) -> HashMap<&str, Producer> {
        let mut map = HashMap::new();
        for (i, s) in self.sources.iter().enumerate() {
            map.insert(s.as_str(), Producer::Source(i));
        }
        for (e, el) in self.elements.iter().enumerate() {
            for (k, out) in el.outputs.iter().enumerate() {
                map.insert(out.as_str(), Producer::Output { element: e, slot: k });
            }
        }
        map
    }

    /// Rewrites the port's annihilation operator as a complex-linear
    /// combination of source-mode operators.
    pub fn resolve(&self, port: &str) -> Result<Vec<(ModeId, C64)>, NetworkError> {
        let producers = self.producers();
        let mut memo: HashMap<String, Vec<C64>> = HashMap::new();
        let mut visiting: BTreeSet<String> = BTreeSet::new();
        let coeffs = self.resolve_rec(port, &producers, &mut memo, &mut visiting)?;
        Ok(self
            .sources
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| c.norm() > 1e-15)
            .map(|(s, c)| (ModeId::single(s), c))
            .collect())
    }

    fn resolve_rec(
        &self,
        port: &str,
        producers: &HashMap<&str, Producer>,
        memo: &mut HashMap<String, Vec<C64>>,
        visiting: &mut BTreeSet<String>,
    ) -> Result<Vec<C64>, NetworkError> {
        if let Some(v) = memo.get(port) {
            return Ok(v.clone());
        }
        if !visiting.insert(port.to_string()) {
            return Err(NetworkError::CyclicWiring(port.to_string()));
        }
        let result = match producers.get(port) {
            None => Err(NetworkError::UnknownPort(port.to_string())),
            Some(Producer::Source(i)) => {
                let mut v = vec![C64::new(0.0, 0.0); self.sources.len()];
                v[*i] = C64::new(1.0, 0.0);
                Ok(v)
            }
            Some(Producer::Output { element, slot }) => {
                let el = &self.elements[*element];
                let matrix = el.kind.matrix();
                let row = &matrix[*slot];
                let mut acc = vec![C64::new(0.0, 0.0); self.sources.len()];
                for (j, input) in el.inputs.iter().enumerate() {
                    let sub = self.resolve_rec(input, producers, memo, visiting)?;
                    for (k, c) in sub.iter().enumerate() {
                        acc[k] += row[j] * c;
                    }
                }
                Ok(acc)
            }
        };
        visiting.remove(port);
        if let Ok(v) = &result {
            memo.insert(port.to_string(), v.clone());
        }
        result
    }

    /// The photon-number operator of a detector's port, resolved onto
    /// source modes and normal-ordered.
    pub fn detector_operator(&self, detector: &str) -> Result<OperatorPoly, NetworkError> {
        self.detector_operator_at(detector, Sideband::Single)
    }

    /// Same, with all source modes labeled at the given sideband. The
    /// optics is frequency-diagonal, so a two-photon analysis reuses the
    /// network once per sideband.
    pub fn detector_operator_at(
        &self,
        detector: &str,
        sideband: Sideband,
    ) -> Result<OperatorPoly, NetworkError> {
        let port = self.detector_port(detector)?;
        let combo = self.resolve(port)?;
        let mut field = OperatorPoly::zero();
        for (mode, c) in &combo {
            field = field.add(
                &OperatorPoly::annihilation(mode.with_sideband(sideband)).scale(*c),
            );
        }
        Ok(field.adjoint().mul(&field))
    }

    /// Checks element unitarity, port arities, wiring shape, acyclicity,
    /// detector reachability, and global source-to-detector isometry.
    /// Returns all violations found; an empty list means the network is ok.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();

        for el in &self.elements {
            let (nin, nout) = el.kind.arity();
            if el.inputs.len() != nin || el.outputs.len() != nout {
                violations.push(Violation::BadArity {
                    name: el.name.clone(),
                });
            }
            let defect = el.kind.unitarity_defect();
            if defect > ISOMETRY_TOL {
                violations.push(Violation::NonUnitaryElement {
                    name: el.name.clone(),
                    defect,
                });
            }
        }

        // production/consumption counts
        let mut produced: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &self.sources {
            *produced.entry(s.as_str()).or_insert(0) += 1;
        }
        for el in &self.elements {
            for out in &el.outputs {
                *produced.entry(out.as_str()).or_insert(0) += 1;
            }
        }
        for (port, count) in &produced {
            if *count > 1 {
                violations.push(Violation::PortFanIn {
                    port: port.to_string(),
                });
            }
        }
        let mut consumed: BTreeMap<&str, usize> = BTreeMap::new();
        for el in &self.elements {
            for input in &el.inputs {
                *consumed.entry(input.as_str()).or_insert(0) += 1;
            }
        }
        for port in self.detectors.values() {
            *consumed.entry(port.as_str()).or_insert(0) += 1;
        }
        for (port, count) in &consumed {
            if *count > 1 {
                violations.push(Violation::PortFanOut {
                    port: port.to_string(),
                });
            }
            if !produced.contains_key(port) {
                violations.push(Violation::DanglingPort {
                    port: port.to_string(),
                });
            }
        }

        if let Err(cycle_at) = self.topo_order() {
            violations.push(Violation::Cycle { name: cycle_at });
        } else {
            // reachability and the global isometry only make sense on an
            // acyclic, well-formed wiring
            let mut rows: Vec<Vec<C64>> = Vec::new();
            let mut reachable_ok = true;
            for (name, port) in &self.detectors {
                match self.resolve(port) {
                    Err(_) => {
                        reachable_ok = false;
                        violations.push(Violation::UnreachableDetector { name: name.clone() });
                    }
                    Ok(combo) => {
                        let mut row = vec![C64::new(0.0, 0.0); self.sources.len()];
                        for (mode, c) in combo {
                            if let Some(i) = self.sources.iter().position(|s| *s == mode.label) {
                                row[i] = c;
                            }
                        }
                        rows.push(row);
                    }
                }
            }
            if reachable_ok && !self.sources.is_empty() {
                let n = self.sources.len();
                let mut defect: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let mut dot = C64::new(0.0, 0.0);
                        for row in &rows {
                            dot += row[i].conj() * row[j];
                        }
                        let expected = if i == j { 1.0 } else { 0.0 };
                        defect = defect.max((dot - C64::new(expected, 0.0)).norm());
                    }
                }
                if defect > ISOMETRY_TOL {
                    violations.push(Violation::NonIsometricGlobalMap { defect });
                }
            }
        }

        violations
    }

    /// Topologically ordered element indices; `Err` carries the name of an
    /// element on a cycle.
    pub fn topo_order(&self) -> Result<Vec<usize>, String> {
        // element -> set of upstream elements via shared port names
        let mut producer_of: HashMap<&str, usize> = HashMap::new();
        for (e, el) in self.elements.iter().enumerate() {
            for out in &el.outputs {
                producer_of.insert(out.as_str(), e);
            }
        }
        let n = self.elements.len();
        let mut indegree = vec![0usize; n];
        let mut downstream: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (e, el) in self.elements.iter().enumerate() {
            for input in &el.inputs {
                if let Some(&up) = producer_of.get(input.as_str()) {
                    downstream[up].push(e);
                    indegree[e] += 1;
                }
            }
        }
        let mut queue: Vec<usize> = (0..n).filter(|&e| indegree[e] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(e) = queue.pop() {
            order.push(e);
            for &d in &downstream[e] {
                indegree[d] -= 1;
                if indegree[d] == 0 {
                    queue.push(d);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&e| indegree[e] > 0).unwrap();
            return Err(self.elements[stuck].name.clone());
        }
        Ok(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::OperatorPoly;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn fig1() -> Network {
        let bs = Element {
            name: "bs".into(),
            kind: ElementKind::beamsplitter_50_50(BsOrientation::MinusSecondInput),
            inputs: vec!["b".into(), "l_i".into()],
            outputs: vec!["c_o".into(), "d_o".into()],
        };
        let mut detectors = BTreeMap::new();
        detectors.insert("D1".to_string(), "c_o".to_string());
        detectors.insert("D2".to_string(), "d_o".to_string());
        Network::new(vec![bs], vec!["b".into(), "l_i".into()], detectors)
    }

    #[test]
    fn fig1_junctions() {
        let net = fig1();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let co = net.resolve("c_o").unwrap();
        assert_eq!(co.len(), 2);
        assert!((co[0].1 - c(s, 0.0)).norm() < 1e-15);
        assert!((co[1].1 - c(s, 0.0)).norm() < 1e-15);
        let do_ = net.resolve("d_o").unwrap();
        assert!((do_[0].1 - c(s, 0.0)).norm() < 1e-15);
        assert!((do_[1].1 - c(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fig1_difference_operator() {
        let net = fig1();
        let diff = net
            .detector_operator("D1")
            .unwrap()
            .sub(&net.detector_operator("D2").unwrap());
        let expected = OperatorPoly::creation(ModeId::single("l_i"))
            .mul(&OperatorPoly::annihilation(ModeId::single("b")))
            .add(
                &OperatorPoly::creation(ModeId::single("b"))
                    .mul(&OperatorPoly::annihilation(ModeId::single("l_i"))),
            );
        assert!(diff.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn identity_network_detector() {
        let mut detectors = BTreeMap::new();
        detectors.insert("D".to_string(), "a".to_string());
        let net = Network::new(Vec::new(), vec!["a".into()], detectors);
        let n = net.detector_operator("D").unwrap();
        assert_eq!(n, OperatorPoly::number(ModeId::single("a")));
        assert!(net.validate().is_empty());
    }

    #[test]
    fn nonunitary_element_flagged() {
        let bs = Element {
            name: "bad".into(),
            kind: ElementKind::BeamSplitter {
                r: 0.8,
                t: 0.8,
                orientation: BsOrientation::MinusSecondInput,
            },
            inputs: vec!["a".into(), "b".into()],
            outputs: vec!["x".into(), "y".into()],
        };
        let mut detectors = BTreeMap::new();
        detectors.insert("D1".to_string(), "x".to_string());
        detectors.insert("D2".to_string(), "y".to_string());
        let net = Network::new(vec![bs], vec!["a".into(), "b".into()], detectors);
        let violations = net.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::NonUnitaryElement { .. })));
    }

    #[test]
    fn port_fan_in_flagged() {
        // two sources producing the same port name
        let mut detectors = BTreeMap::new();
        detectors.insert("D".to_string(), "a".to_string());
        let net = Network::new(Vec::new(), vec!["a".into(), "a".into()], detectors);
        let violations = net.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::PortFanIn { .. })));
    }

    #[test]
    fn unreachable_port_errors() {
        let net = fig1();
        assert!(matches!(
            net.resolve("nope"),
            Err(NetworkError::UnknownPort(_))
        ));
    }

    #[test]
    fn cycle_detected() {
        let pr1 = Element {
            name: "pr1".into(),
            kind: ElementKind::PhaseRotator { phi: 0.1 },
            inputs: vec!["x".into()],
            outputs: vec!["y".into()],
        };
        let pr2 = Element {
            name: "pr2".into(),
            kind: ElementKind::PhaseRotator { phi: 0.2 },
            inputs: vec!["y".into()],
            outputs: vec!["x".into()],
        };
        let net = Network::new(vec![pr1, pr2], vec![], BTreeMap::new());
        assert!(net.topo_order().is_err());
        assert!(net
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::Cycle { .. })));
    }
}
