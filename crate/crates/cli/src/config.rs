//! Line-oriented network/state configuration files.
//!
//! Records, one per line, `#` starts a comment:
//!
//! ```text
//! network fig1|fig2                  # use a builtin topology instead of elements
//! element <name> beamsplitter <r> <t> [sum-diff|diff-sum|sum-negdiff] in=<p>,<p> out=<p>,<p>
//! element <name> phaserotator <phi> in=<p> out=<p>
//! source <mode> vacuum
//! source <mode> coherent <re> <im>
//! source <mode> gaussian <mean_re> <mean_im> <n_ex> <m_re> <m_im>
//! detector <name> port=<port>
//! ```
//!
//! A mode label may carry a `+` or `-` suffix to address one sideband of the
//! two-photon analysis; the bare label names the network port.

use std::collections::BTreeMap;
use std::fmt;

use homodyne_core::algebra::{ModeId, Sideband, C64};
use homodyne_core::network::{BsOrientation, Element, ElementKind, Network};
use homodyne_core::schemes::{build_balanced_homodyne, build_eight_port};
use homodyne_core::states::{ModeState, StateAssignment};

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug)]
pub struct ConfigFile {
    pub network: Network,
    pub states: StateAssignment,
    /// Builtin topology name, if the file used `network fig1|fig2`.
    pub builtin: Option<String>,
}

/// Parses `a+bi` / `a-bi` / `a` / `bi` complex literals.
pub fn parse_complex(tok: &str) -> Option<C64> {
    if let Some(body) = tok.strip_suffix('i') {
        // split at the last +/- that is not a leading sign or exponent sign
        let bytes = body.as_bytes();
        for pos in (1..bytes.len()).rev() {
            let ch = bytes[pos] as char;
            if (ch == '+' || ch == '-') && !matches!(bytes[pos - 1] as char, 'e' | 'E') {
                let re: f64 = body[..pos].parse().ok()?;
                let im_str = &body[pos..];
                let im: f64 = if im_str == "+" {
                    1.0
                } else if im_str == "-" {
                    -1.0
                } else {
                    im_str.parse().ok()?
                };
                return Some(C64::new(re, im));
            }
        }
        // pure imaginary: "2i", "i", "-i"
        let im: f64 = match body {
            "" => 1.0,
            "-" => -1.0,
            _ => body.parse().ok()?,
        };
        return Some(C64::new(0.0, im));
    }
    tok.parse().ok().map(|re| C64::new(re, 0.0))
}

pub fn render_complex(c: C64) -> String {
    if c.im >= 0.0 {
        format!("{}+{}i", c.re, c.im)
    } else {
        format!("{}{}i", c.re, c.im)
    }
}

fn parse_mode(tok: &str) -> ModeId {
    if tok.len() > 1 {
        if let Some(base) = tok.strip_suffix('+') {
            return ModeId::at(base, Sideband::Plus);
        }
        if let Some(base) = tok.strip_suffix('-') {
            return ModeId::at(base, Sideband::Minus);
        }
    }
    ModeId::single(tok)
}

fn render_mode(mode: &ModeId) -> String {
    match mode.sideband {
        Sideband::Plus => format!("{}+", mode.label),
        Sideband::Minus => format!("{}-", mode.label),
        Sideband::Single => mode.label.clone(),
    }
}

fn parse_ports(tok: &str, prefix: &str) -> Option<Vec<String>> {
    tok.strip_prefix(prefix)
        .map(|rest| rest.split(',').map(|s| s.trim().to_string()).collect())
}

struct LineParser<'a> {
    line: usize,
    tokens: Vec<&'a str>,
    cursor: usize,
}

impl<'a> LineParser<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str, ParseError> {
        let tok = self.tokens.get(self.cursor).copied().ok_or(ParseError {
            line: self.line,
            message: format!("missing {what}"),
        })?;
        self.cursor += 1;
        Ok(tok)
    }

    fn next_f64(&mut self, what: &str) -> Result<f64, ParseError> {
        let tok = self.next(what)?;
        tok.parse().map_err(|_| ParseError {
            line: self.line,
            message: format!("malformed {what}: {tok:?}"),
        })
    }

    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.cursor).copied()
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.cursor == self.tokens.len() {
            Ok(())
        } else {
            Err(ParseError {
                line: self.line,
                message: format!("unexpected trailing token {:?}", self.tokens[self.cursor]),
            })
        }
    }
}

pub fn parse_config(text: &str) -> Result<ConfigFile, Vec<ParseError>> {
    let mut errors = Vec::new();
    let mut builtin: Option<String> = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut sources: Vec<String> = Vec::new();
    let mut detectors: BTreeMap<String, String> = BTreeMap::new();
    let mut states = StateAssignment::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut p = LineParser {
            line: line_no,
            tokens: line.split_whitespace().collect(),
            cursor: 0,
        };
        let result = (|| -> Result<(), ParseError> {
            match p.next("record kind")? {
                "network" => {
                    let name = p.next("builtin network name")?;
                    if name != "fig1" && name != "fig2" {
                        return Err(ParseError {
                            line: line_no,
                            message: format!("unknown builtin network {name:?}"),
                        });
                    }
                    builtin = Some(name.to_string());
                    p.finish()
                }
                "element" => {
                    let name = p.next("element name")?.to_string();
                    let kind = match p.next("element kind")? {
                        "beamsplitter" => {
                            let r = p.next_f64("beamsplitter r")?;
                            let t = p.next_f64("beamsplitter t")?;
                            let orientation = match p.peek().and_then(BsOrientation::parse) {
                                Some(o) => {
                                    p.cursor += 1;
                                    o
                                }
                                None => BsOrientation::MinusSecondInput,
                            };
                            ElementKind::BeamSplitter { r, t, orientation }
                        }
                        "phaserotator" => ElementKind::PhaseRotator {
                            phi: p.next_f64("phaserotator phi")?,
                        },
                        other => {
                            return Err(ParseError {
                                line: line_no,
                                message: format!("unknown element kind {other:?}"),
                            })
                        }
                    };
                    let inputs = parse_ports(p.next("in= port list")?, "in=").ok_or(ParseError {
                        line: line_no,
                        message: "expected in=<ports>".into(),
                    })?;
                    let outputs =
                        parse_ports(p.next("out= port list")?, "out=").ok_or(ParseError {
                            line: line_no,
                            message: "expected out=<ports>".into(),
                        })?;
                    let (nin, nout) = kind.arity();
                    if inputs.len() != nin || outputs.len() != nout {
                        return Err(ParseError {
                            line: line_no,
                            message: format!(
                                "element {name} needs {nin} inputs and {nout} outputs"
                            ),
                        });
                    }
                    elements.push(Element {
                        name,
                        kind,
                        inputs,
                        outputs,
                    });
                    p.finish()
                }
                "source" => {
                    let mode = parse_mode(p.next("source mode")?);
                    let state = match p.next("state kind")? {
                        "vacuum" => ModeState::Vacuum,
                        "coherent" => {
                            let re = p.next_f64("coherent re")?;
                            let im = p.next_f64("coherent im")?;
                            ModeState::Coherent(C64::new(re, im))
                        }
                        "gaussian" => {
                            let re = p.next_f64("gaussian mean re")?;
                            let im = p.next_f64("gaussian mean im")?;
                            let n_ex = p.next_f64("gaussian n_ex")?;
                            let m_re = p.next_f64("gaussian m_anom re")?;
                            let m_im = p.next_f64("gaussian m_anom im")?;
                            ModeState::gaussian(
                                C64::new(re, im),
                                n_ex,
                                C64::new(m_re, m_im),
                            )
                            .map_err(|e| ParseError {
                                line: line_no,
                                message: format!("unphysical gaussian state: {e}"),
                            })?
                        }
                        other => {
                            return Err(ParseError {
                                line: line_no,
                                message: format!("unknown state kind {other:?}"),
                            })
                        }
                    };
                    if !sources.contains(&mode.label) {
                        sources.push(mode.label.clone());
                    }
                    states.insert(mode, state);
                    p.finish()
                }
                "detector" => {
                    let name = p.next("detector name")?.to_string();
                    let port_tok = p.next("port= assignment")?;
                    let port = port_tok.strip_prefix("port=").ok_or(ParseError {
                        line: line_no,
                        message: "expected port=<port>".into(),
                    })?;
                    detectors.insert(name, port.to_string());
                    p.finish()
                }
                other => Err(ParseError {
                    line: line_no,
                    message: format!("unknown record kind {other:?}"),
                }),
            }
        })();
        if let Err(e) = result {
            errors.push(e);
        }
    }

    if let Some(name) = &builtin {
        if !elements.is_empty() || !detectors.is_empty() {
            errors.push(ParseError {
                line: last_line,
                message: "builtin network cannot be combined with element/detector lines".into(),
            });
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        let network = match name.as_str() {
            "fig1" => build_balanced_homodyne(),
            _ => build_eight_port(),
        };
        return Ok(ConfigFile {
            network,
            states,
            builtin,
        });
    }

    if detectors.is_empty() {
        errors.push(ParseError {
            line: last_line,
            message: "no detectors declared".into(),
        });
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(ConfigFile {
        network: Network::new(elements, sources, detectors),
        states,
        builtin: None,
    })
}

/// Renders a config back to the line format. `parse_config(render(c))`
/// reproduces `c` (floats use shortest round-trip formatting).
pub fn render(cfg: &ConfigFile) -> String {
    let mut out = String::new();
    if let Some(name) = &cfg.builtin {
        out.push_str(&format!("network {name}\n"));
    } else {
        for el in cfg.network.elements() {
            match &el.kind {
                ElementKind::BeamSplitter { r, t, orientation } => {
                    out.push_str(&format!(
                        "element {} beamsplitter {} {} {} in={} out={}\n",
                        el.name,
                        r,
                        t,
                        orientation,
                        el.inputs.join(","),
                        el.outputs.join(",")
                    ));
                }
                ElementKind::PhaseRotator { phi } => {
                    out.push_str(&format!(
                        "element {} phaserotator {} in={} out={}\n",
                        el.name,
                        phi,
                        el.inputs.join(","),
                        el.outputs.join(",")
                    ));
                }
            }
        }
    }
    // every network source keeps a line so the port set survives parsing;
    // sideband-labeled states follow
    let mut emitted: Vec<ModeId> = Vec::new();
    for label in cfg.network.sources() {
        if cfg.builtin.is_some()
            && !cfg
                .states
                .assigned()
                .any(|(m, _)| &m.label == label && m.sideband == Sideband::Single)
        {
            continue;
        }
        let mode = ModeId::single(label);
        out.push_str(&render_source(&mode, &cfg.states.state(&mode)));
        emitted.push(mode);
    }
    for (mode, state) in cfg.states.assigned() {
        if emitted.contains(mode) {
            continue;
        }
        out.push_str(&render_source(mode, state));
    }
    if cfg.builtin.is_none() {
        for (name, port) in cfg.network.detectors() {
            out.push_str(&format!("detector {name} port={port}\n"));
        }
    }
    out
}

fn render_source(mode: &ModeId, state: &ModeState) -> String {
    let mode = render_mode(mode);
    match state {
        ModeState::Vacuum => format!("source {mode} vacuum\n"),
        ModeState::Coherent(c) => format!("source {mode} coherent {} {}\n", c.re, c.im),
        ModeState::Gaussian {
            mean,
            n_ex,
            m_anom,
        } => format!(
            "source {mode} gaussian {} {} {} {} {}\n",
            mean.re, mean.im, n_ex, m_anom.re, m_anom.im
        ),
    }
}
