//! Case analysis for the topological complexity and sectional number of a
//! tube fibration `f_|: E → S^{p−1}_η`.
//!
//! Only the rules below are used; no bound is derived from sampling except
//! through the flags and the fiber component count passed in.

use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::fibration::{MapKind, WorkMap};
use crate::milnor::{Germ, LinkSample, TriState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "TC")]
    Tc,
    #[serde(rename = "sec")]
    Sec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// Where a flag value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagSource {
    Declared,
    Sampled,
    Unset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub value: TriState,
    pub source: FlagSource,
}

impl Flag {
    pub fn declared(value: TriState) -> Self {
        let source = if value == TriState::Unknown {
            FlagSource::Unset
        } else {
            FlagSource::Declared
        };
        Self { value, source }
    }

    pub fn is_yes(&self) -> bool {
        self.value == TriState::Yes
    }
}

/// What the rules need to know about a fibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FibrationFacts {
    pub name: String,
    /// Codomain dimension; the base is `S^{p−1}`.
    pub p: usize,
    pub link_nonempty: Flag,
    /// `π_{p−2}(F) = 0` for the fiber `F`.
    pub pi_trivial: Flag,
}

impl FibrationFacts {
    pub fn from_germ(g: &Germ) -> Self {
        Self {
            name: g.name.clone(),
            p: 2,
            link_nonempty: Flag::declared(g.flags.link_nonempty),
            pi_trivial: Flag::declared(g.flags.pi_trivial),
        }
    }

    /// The Hopf map has `f⁻¹(0) = {0}` (empty link) and circle fibers.
    pub fn from_workmap(map: &WorkMap) -> Result<Self, VerifyError> {
        match &map.kind {
            MapKind::Germ(g) => Ok(Self::from_germ(g)),
            MapKind::Hopf => Ok(Self {
                name: map.name(),
                p: 3,
                link_nonempty: Flag::declared(TriState::No),
                pi_trivial: Flag::declared(TriState::No),
            }),
            MapKind::RrArm => Err(VerifyError::NotFibration(map.name())),
        }
    }

    /// Fills an undeclared link flag from link sampling.
    pub fn with_link_sample(mut self, sample: &LinkSample) -> Self {
        if self.link_nonempty.source == FlagSource::Unset {
            self.link_nonempty = Flag {
                value: sample.link_nonempty,
                source: FlagSource::Sampled,
            };
        }
        self
    }

    pub fn parity(&self) -> Parity {
        if self.p.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// One applied rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Justification {
    pub tag: String,
    pub statement: String,
    pub assumptions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateInputs {
    pub map: String,
    pub p: usize,
    pub parity: Parity,
    pub link_nonempty: Flag,
    pub pi_trivial: Flag,
    pub fiber_components: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub quantity: Quantity,
    pub lower: u32,
    pub upper: u32,
    pub exact: Option<u32>,
    pub tags: Vec<String>,
    /// Hypotheses the rules rely on that are not checked here.
    pub assumptions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section_exists: Option<TriState>,
    pub justification: Vec<Justification>,
    pub inputs: CertificateInputs,
}

impl Certificate {
    fn new(quantity: Quantity, facts: &FibrationFacts, components: Option<usize>) -> Self {
        Self {
            quantity,
            lower: 0,
            upper: 0,
            exact: None,
            tags: Vec::new(),
            assumptions: Vec::new(),
            section_exists: None,
            justification: Vec::new(),
            inputs: CertificateInputs {
                map: facts.name.clone(),
                p: facts.p,
                parity: facts.parity(),
                link_nonempty: facts.link_nonempty,
                pi_trivial: facts.pi_trivial,
                fiber_components: components,
            },
        }
    }

    fn apply(&mut self, tag: &str, statement: &str, assumptions: &[&str]) {
        self.tags.push(tag.to_string());
        for a in assumptions {
            if !self.assumptions.iter().any(|x| x == a) {
                self.assumptions.push(a.to_string());
            }
        }
        self.justification.push(Justification {
            tag: tag.to_string(),
            statement: statement.to_string(),
            assumptions: assumptions.iter().map(|a| a.to_string()).collect(),
        });
    }

    /// `lower ≤ exact ≤ upper`.
    pub fn is_consistent(&self) -> bool {
        self.lower <= self.upper && self.exact.is_none_or(|e| self.lower <= e && e <= self.upper)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialize")
    }
}

/// `TC(S^m)`: 2 for odd `m`, 3 for even `m`.
pub fn sphere_tc(m: usize) -> u32 {
    if m % 2 == 1 {
        2
    } else {
        3
    }
}

const MILNOR: &str = "milnor-conditions";

pub fn certify_tc(facts: &FibrationFacts) -> Result<Certificate, VerifyError> {
    if facts.p < 2 {
        return Err(VerifyError::WrongCodomain {
            expected: "p >= 2",
            got: facts.p,
        });
    }
    let mut c = Certificate::new(Quantity::Tc, facts, None);
    c.lower = 2;
    c.apply(
        "cat-lower-bound",
        "TC of a map is at least the category of its codomain, and cat(S^{p-1}) = 2",
        &[],
    );
    c.upper = sphere_tc(facts.p - 1);
    c.apply(
        "base-tc-upper-bound",
        "any planner on S^{p-1} lifts along the fibration, so TC(f) <= TC(S^{p-1}), which is 2 for p even and 3 for p odd",
        &[MILNOR],
    );
    match facts.parity() {
        Parity::Even => {
            c.exact = Some(2);
            c.apply("even-codomain", "p even: the bounds meet at 2", &[MILNOR]);
        }
        Parity::Odd if facts.link_nonempty.is_yes() => {
            c.exact = Some(3);
            c.apply(
                "nonempty-link-section",
                "p odd with an isolated singular point and nonempty link: the tube fibration has a global section, so TC(f) = TC(S^{p-1}) = 3",
                &[MILNOR, "isolated-singularity"],
            );
        }
        Parity::Odd if facts.pi_trivial.is_yes() => {
            c.exact = Some(3);
            c.apply(
                "pi-trivial-section",
                "p odd with pi_{p-2}(F) = 0: the tube fibration has a global section, so TC(f) = TC(S^{p-1}) = 3",
                &[MILNOR, "link-cells-dimension"],
            );
        }
        Parity::Odd => {
            c.apply(
                "bounds-only",
                "p odd and no section criterion applies: 2 <= TC(f) <= 3",
                &[],
            );
        }
    }
    debug_assert!(c.is_consistent());
    Ok(c)
}

/// Sectional number over `S¹` from the fiber component count.
pub fn certify_sec(facts: &FibrationFacts, components: usize) -> Result<Certificate, VerifyError> {
    if facts.p != 2 {
        return Err(VerifyError::WrongCodomain {
            expected: "p = 2",
            got: facts.p,
        });
    }
    if components == 0 {
        return Err(VerifyError::NoComponents);
    }
    let mut c = Certificate::new(Quantity::Sec, facts, Some(components));
    let hyp = [MILNOR, "link-cells-dimension"];
    if components >= 2 {
        c.lower = 2;
        c.upper = 2;
        c.exact = Some(2);
        c.section_exists = Some(TriState::No);
        c.apply(
            "fiber-disconnected",
            "over S^1 the sectional number is 2 exactly when the fiber is not path connected",
            &hyp,
        );
    } else {
        c.lower = 1;
        c.upper = 1;
        c.exact = Some(1);
        c.section_exists = Some(TriState::Yes);
        c.apply(
            "fiber-connected-section",
            "over S^1 a connected fiber gives a global cross-section, so the sectional number is 1",
            &hyp,
        );
    }
    Ok(c)
}

/// A planner that passed its contract suite with `regions` regions gives
/// `TC ≤ regions`; on the coded examples this matches the rule-based upper
/// bound.
pub fn planner_bound_consistent(cert: &Certificate, regions: usize, suite_passed: bool) -> bool {
    suite_passed && cert.quantity == Quantity::Tc && regions as u32 == cert.upper
}
