//! Species, configurations and rules of a discrete chemical reaction network.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::circuit::GateId;

/// Dense ordinal of a species inside its [`Alphabet`].
pub type SpeciesId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CrnError {
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("duplicate species `{0}` in alphabet")]
    DuplicateSpecies(String),
    #[error("invalid species name `{0}`")]
    InvalidName(String),
    #[error("rule has no reactants")]
    EmptyReactants,
    #[error("cannot parse rule `{text}`: {message}")]
    RuleSyntax { text: String, message: String },
    #[error("cannot parse configuration `{text}`: {message}")]
    ConfigSyntax { text: String, message: String },
    #[error("configuration has {config} species but the rule refers to species {species}")]
    AlphabetMismatch { config: usize, species: SpeciesId },
    #[error("rule is not applicable to the configuration")]
    NotApplicable,
}

/// Structured view of the species names the compilers emit.
///
/// Grammar: `x[i]T|F`, `y[i]T|F`, `y[j->i]T|F`, `a[i]T|F`, `b[i]T|F`, `dx`, `dy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpeciesName {
    X(GateId, bool),
    Y(GateId, bool),
    YWire(GateId, GateId, bool),
    A(GateId, bool),
    B(GateId, bool),
    Dx,
    Dy,
}

impl SpeciesName {
    /// The gate whose lowering owns this species, if any.
    pub fn owner(self) -> Option<GateId> {
        match self {
            SpeciesName::X(i, _)
            | SpeciesName::Y(i, _)
            | SpeciesName::YWire(_, i, _)
            | SpeciesName::A(i, _)
            | SpeciesName::B(i, _) => Some(i),
            SpeciesName::Dx | SpeciesName::Dy => None,
        }
    }

    pub fn value(self) -> Option<bool> {
        match self {
            SpeciesName::X(_, v)
            | SpeciesName::Y(_, v)
            | SpeciesName::YWire(_, _, v)
            | SpeciesName::A(_, v)
            | SpeciesName::B(_, v) => Some(v),
            SpeciesName::Dx | SpeciesName::Dy => None,
        }
    }
}

fn tf(v: bool) -> char {
    if v {
        'T'
    } else {
        'F'
    }
}

impl fmt::Display for SpeciesName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SpeciesName::X(i, v) => write!(f, "x[{i}]{}", tf(v)),
            SpeciesName::Y(i, v) => write!(f, "y[{i}]{}", tf(v)),
            SpeciesName::YWire(j, i, v) => write!(f, "y[{j}->{i}]{}", tf(v)),
            SpeciesName::A(i, v) => write!(f, "a[{i}]{}", tf(v)),
            SpeciesName::B(i, v) => write!(f, "b[{i}]{}", tf(v)),
            SpeciesName::Dx => f.write_str("dx"),
            SpeciesName::Dy => f.write_str("dy"),
        }
    }
}

impl FromStr for SpeciesName {
    type Err = CrnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CrnError::InvalidName(s.to_string());
        match s {
            "dx" => return Ok(SpeciesName::Dx),
            "dy" => return Ok(SpeciesName::Dy),
            _ => {}
        }
        let mut chars = s.chars();
        let family = chars.next().ok_or_else(bad)?;
        let rest = chars.as_str();
        let inner = rest.strip_prefix('[').ok_or_else(bad)?;
        let close = inner.find(']').ok_or_else(bad)?;
        let (body, tail) = (&inner[..close], &inner[close + 1..]);
        let value = match tail {
            "T" => true,
            "F" => false,
            _ => return Err(bad()),
        };
        let num = |t: &str| -> Result<GateId, CrnError> {
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            t.parse().map_err(|_| bad())
        };
        match (family, body.split_once("->")) {
            ('y', Some((j, i))) => Ok(SpeciesName::YWire(num(j)?, num(i)?, value)),
            ('x', None) => Ok(SpeciesName::X(num(body)?, value)),
            ('y', None) => Ok(SpeciesName::Y(num(body)?, value)),
            ('a', None) => Ok(SpeciesName::A(num(body)?, value)),
            ('b', None) => Ok(SpeciesName::B(num(body)?, value)),
            _ => Err(bad()),
        }
    }
}

fn valid_generic_name(s: &str) -> bool {
    !s.is_empty()
        && s != "."
        && !s.bytes().all(|b| b.is_ascii_digit())
        && !s.bytes().next().unwrap().is_ascii_digit()
        && s.chars()
            .all(|c| !c.is_whitespace() && !matches!(c, '+' | ',' | '=' | ':' | '{' | '}' | '*'))
}

/// Ordered, frozen set of species names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, SpeciesId>,
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self, CrnError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut alphabet = Alphabet::default();
        for n in names {
            let n = n.into();
            if !valid_generic_name(&n) {
                return Err(CrnError::InvalidName(n));
            }
            if alphabet.index.contains_key(&n) {
                return Err(CrnError::DuplicateSpecies(n));
            }
            alphabet.index.insert(n.clone(), alphabet.names.len());
            alphabet.names.push(n);
        }
        Ok(alphabet)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: SpeciesId) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, name: &str) -> Result<SpeciesId, CrnError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| CrnError::UnknownSpecies(name.to_string()))
    }

    pub fn get(&self, name: &SpeciesName) -> Option<SpeciesId> {
        self.index.get(&name.to_string()).copied()
    }

    pub fn structured(&self, id: SpeciesId) -> Option<SpeciesName> {
        self.names[id].parse().ok()
    }
}

/// Species counts, one entry per alphabet ordinal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Configuration(Vec<u64>);

impl Configuration {
    pub fn zeros(len: usize) -> Self {
        Configuration(vec![0; len])
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        Configuration(counts)
    }

    pub fn from_sparse(len: usize, entries: &[(SpeciesId, u64)]) -> Self {
        let mut c = Self::zeros(len);
        for &(s, n) in entries {
            c.0[s] += n;
        }
        c
    }

    /// Parses `{A:1, B:2}` (braces optional) against an alphabet.
    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self, CrnError> {
        let err = |message: String| CrnError::ConfigSyntax {
            text: text.to_string(),
            message,
        };
        let body = text.trim();
        let body = body
            .strip_prefix('{')
            .and_then(|b| b.strip_suffix('}'))
            .unwrap_or(body);
        let mut c = Self::zeros(alphabet.len());
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, count) = item
                .rsplit_once([':', '='])
                .ok_or_else(|| err(format!("expected `name:count`, found `{item}`")))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| err(format!("bad count in `{item}`")))?;
            c.0[alphabet.id(name.trim())?] += count;
        }
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn counts_mut(&mut self) -> &mut [u64] {
        &mut self.0
    }

    pub fn get(&self, s: SpeciesId) -> u64 {
        self.0[s]
    }

    pub fn set(&mut self, s: SpeciesId, n: u64) {
        self.0[s] = n;
    }

    pub fn volume(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn add_assign(&mut self, other: &Configuration) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn sparse(&self) -> Vec<(SpeciesId, u64)> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(s, &n)| (s, n))
            .collect()
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> ConfigDisplay<'a> {
        ConfigDisplay {
            config: self,
            alphabet,
        }
    }
}

pub struct ConfigDisplay<'a> {
    config: &'a Configuration,
    alphabet: &'a Alphabet,
}

impl fmt::Display for ConfigDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (s, n)) in self.config.sparse().into_iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}:{}", self.alphabet.name(s), n)?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleFamily {
    TrueVoid,
    CatalyticVoid,
    Autogenesis,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleClass {
    /// `(volume(reactants), volume(products))`.
    pub size: (u64, u64),
    pub family: RuleFamily,
}

/// A reaction `R = (R_r, R_p)` stored sparsely, with the net change cached.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    reactants: Vec<(SpeciesId, u64)>,
    products: Vec<(SpeciesId, u64)>,
    delta: Vec<(SpeciesId, i64)>,
}

fn normalize(terms: &[(SpeciesId, u64)]) -> Vec<(SpeciesId, u64)> {
    let mut map = std::collections::BTreeMap::new();
    for &(s, n) in terms {
        *map.entry(s).or_insert(0) += n;
    }
    map.into_iter().filter(|&(_, n)| n > 0).collect()
}

impl Rule {
    pub fn new(
        reactants: &[(SpeciesId, u64)],
        products: &[(SpeciesId, u64)],
    ) -> Result<Self, CrnError> {
        let reactants = normalize(reactants);
        if reactants.is_empty() {
            return Err(CrnError::EmptyReactants);
        }
        let products = normalize(products);
        let mut delta = std::collections::BTreeMap::new();
        for &(s, n) in &products {
            *delta.entry(s).or_insert(0i64) += n as i64;
        }
        for &(s, n) in &reactants {
            *delta.entry(s).or_insert(0i64) -= n as i64;
        }
        let delta = delta.into_iter().filter(|&(_, d)| d != 0).collect();
        Ok(Rule {
            reactants,
            products,
            delta,
        })
    }

    /// Shorthand for a rule whose reactants each have count one.
    pub fn from_species(reactants: &[SpeciesId], products: &[SpeciesId]) -> Result<Self, CrnError> {
        let r: Vec<_> = reactants.iter().map(|&s| (s, 1)).collect();
        let p: Vec<_> = products.iter().map(|&s| (s, 1)).collect();
        Rule::new(&r, &p)
    }

    pub fn reactants(&self) -> &[(SpeciesId, u64)] {
        &self.reactants
    }

    pub fn products(&self) -> &[(SpeciesId, u64)] {
        &self.products
    }

    /// Non-zero entries of `R_a = R_p - R_r`.
    pub fn delta(&self) -> &[(SpeciesId, i64)] {
        &self.delta
    }

    pub fn reactant_vector(&self, len: usize) -> Configuration {
        Configuration::from_sparse(len, &self.reactants)
    }

    pub fn product_vector(&self, len: usize) -> Configuration {
        Configuration::from_sparse(len, &self.products)
    }

    pub fn application_vector(&self, len: usize) -> Vec<i64> {
        let mut v = vec![0i64; len];
        for &(s, d) in &self.delta {
            v[s] = d;
        }
        v
    }

    fn max_species(&self) -> SpeciesId {
        self.reactants
            .iter()
            .chain(&self.products)
            .map(|&(s, _)| s)
            .max()
            .unwrap_or(0)
    }

    pub fn classify(&self) -> RuleClass {
        let i = self.reactants.iter().map(|&(_, n)| n).sum();
        let j = self.products.iter().map(|&(_, n)| n).sum();
        let nonzero = !self.delta.is_empty();
        let no_pos = self.delta.iter().all(|&(_, d)| d <= 0);
        let no_neg = self.delta.iter().all(|&(_, d)| d >= 0);
        let family = if nonzero && no_pos {
            if self.products.is_empty() {
                RuleFamily::TrueVoid
            } else {
                RuleFamily::CatalyticVoid
            }
        } else if nonzero && no_neg {
            RuleFamily::Autogenesis
        } else {
            RuleFamily::Other
        };
        RuleClass {
            size: (i, j),
            family,
        }
    }

    pub fn is_void(&self) -> bool {
        matches!(
            self.classify().family,
            RuleFamily::TrueVoid | RuleFamily::CatalyticVoid
        )
    }

    fn check_alphabet(&self, c: &Configuration) -> Result<(), CrnError> {
        let s = self.max_species();
        if s >= c.len() {
            return Err(CrnError::AlphabetMismatch {
                config: c.len(),
                species: s,
            });
        }
        Ok(())
    }

    pub fn applicable(&self, c: &Configuration) -> Result<bool, CrnError> {
        self.check_alphabet(c)?;
        Ok(self.applicable_unchecked(c.counts()))
    }

    #[inline]
    pub(crate) fn applicable_unchecked(&self, counts: &[u64]) -> bool {
        self.reactants.iter().all(|&(s, n)| counts[s] >= n)
    }

    pub fn apply(&self, c: &Configuration) -> Result<Configuration, CrnError> {
        if !self.applicable(c)? {
            return Err(CrnError::NotApplicable);
        }
        let mut out = c.clone();
        self.apply_unchecked(out.counts_mut());
        Ok(out)
    }

    #[inline]
    pub(crate) fn apply_unchecked(&self, counts: &mut [u64]) {
        for &(s, d) in &self.delta {
            counts[s] = counts[s].wrapping_add_signed(d);
        }
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> RuleDisplay<'a> {
        RuleDisplay {
            rule: self,
            alphabet,
        }
    }

    /// Parses `A + B -> .`, `Y + X -> Y` or `2 A -> .` against an alphabet.
    /// `.`, `0` and `∅` denote an empty side.
    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self, CrnError> {
        let err = |message: &str| CrnError::RuleSyntax {
            text: text.to_string(),
            message: message.to_string(),
        };
        let (lhs, rhs) = text.split_once("->").ok_or_else(|| err("missing `->`"))?;
        let side = |s: &str| -> Result<Vec<(SpeciesId, u64)>, CrnError> {
            let s = s.trim();
            if matches!(s, "." | "0" | "∅" | "") {
                return Ok(Vec::new());
            }
            s.split('+')
                .map(|term| {
                    let term = term.trim();
                    let mut parts = term.split_whitespace();
                    let first = parts.next().ok_or_else(|| err("empty term"))?;
                    match (first.parse::<u64>(), parts.next()) {
                        (Ok(n), Some(name)) if parts.next().is_none() => {
                            Ok((alphabet.id(name)?, n))
                        }
                        (Err(_), None) => Ok((alphabet.id(first)?, 1)),
                        _ => Err(err(&format!("malformed term `{term}`"))),
                    }
                })
                .collect()
        };
        // `y[1->2]T` contains `->`, so split on the arrow surrounded by spaces first.
        let (lhs, rhs) = match text.split_once(" -> ") {
            Some(pair) => pair,
            None => (lhs, rhs),
        };
        Rule::new(&side(lhs)?, &side(rhs)?)
    }
}

pub struct RuleDisplay<'a> {
    rule: &'a Rule,
    alphabet: &'a Alphabet,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |f: &mut fmt::Formatter<'_>, terms: &[(SpeciesId, u64)]| -> fmt::Result {
            if terms.is_empty() {
                return f.write_str(".");
            }
            for (k, &(s, n)) in terms.iter().enumerate() {
                if k > 0 {
                    f.write_str(" + ")?;
                }
                if n > 1 {
                    write!(f, "{n} ")?;
                }
                f.write_str(self.alphabet.name(s))?;
            }
            Ok(())
        };
        side(f, &self.rule.reactants)?;
        f.write_str(" -> ")?;
        side(f, &self.rule.products)
    }
}

/// True when no rule in `rules` can fire on `c`.
pub fn is_terminal(c: &Configuration, rules: &[Rule]) -> Result<bool, CrnError> {
    for r in rules {
        if r.applicable(c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Alphabet {
        Alphabet::new(["A", "B", "C", "X", "Y"]).unwrap()
    }

    #[test]
    fn species_grammar_round_trips() {
        for name in ["x[1]T", "y[12]F", "y[3->4]F", "a[9]T", "b[9]F", "dx", "dy"] {
            let parsed: SpeciesName = name.parse().unwrap();
            assert_eq!(parsed.to_string(), name);
        }
        for bad in ["x[1]", "x[]T", "z[1]T", "x[a]T", "a[1->2]T", "y[1->]T"] {
            assert!(bad.parse::<SpeciesName>().is_err(), "{bad}");
        }
        assert_eq!("y[3->4]F".parse::<SpeciesName>().unwrap().owner(), Some(4));
    }

    #[test]
    fn classify_examples() {
        let a = abc();
        let void = Rule::parse(&a, "A + B -> .").unwrap().classify();
        assert_eq!(void.size, (2, 0));
        assert_eq!(void.family, RuleFamily::TrueVoid);

        let cat = Rule::parse(&a, "Y + X -> Y").unwrap().classify();
        assert_eq!(cat.size, (2, 1));
        assert_eq!(cat.family, RuleFamily::CatalyticVoid);

        let water = Rule::parse(&a, "2 A + B -> C").unwrap().classify();
        assert_eq!(water.size, (3, 1));
        assert_eq!(water.family, RuleFamily::Other);

        let auto = Rule::parse(&a, "A -> A + B").unwrap().classify();
        assert_eq!(auto.family, RuleFamily::Autogenesis);

        assert_eq!(
            Rule::parse(&a, ". -> A").unwrap_err(),
            CrnError::EmptyReactants
        );
    }

    #[test]
    fn applicability_and_application() {
        let a = abc();
        let ab = Rule::parse(&a, "A + B -> .").unwrap();
        let c = Configuration::parse(&a, "{A:1, B:1}").unwrap();
        assert!(ab.applicable(&c).unwrap());
        assert_eq!(ab.apply(&c).unwrap().volume(), 0);
        let only_a = Configuration::parse(&a, "{A:1}").unwrap();
        assert!(!ab.applicable(&only_a).unwrap());
        assert_eq!(ab.apply(&only_a).unwrap_err(), CrnError::NotApplicable);

        let aa = Rule::parse(&a, "A + A -> .").unwrap();
        assert_eq!(aa.reactants(), &[(0, 2)]);
        let two_a = Configuration::parse(&a, "{A:2}").unwrap();
        assert!(aa.applicable(&two_a).unwrap());
        assert_eq!(aa.apply(&two_a).unwrap().volume(), 0);

        let cat = Rule::parse(&a, "Y + X -> Y").unwrap();
        let c = Configuration::parse(&a, "{Y:1, X:3}").unwrap();
        let out = cat.apply(&c).unwrap();
        assert_eq!(out.display(&a).to_string(), "{X:2, Y:1}");
    }

    #[test]
    fn alphabet_mismatch_is_reported() {
        let a = abc();
        let r = Rule::parse(&a, "Y + X -> Y").unwrap();
        let short = Configuration::zeros(2);
        assert!(matches!(
            r.applicable(&short),
            Err(CrnError::AlphabetMismatch { config: 2, .. })
        ));
    }

    #[test]
    fn terminal_examples() {
        let a = abc();
        let rules = vec![Rule::parse(&a, "A + B -> .").unwrap()];
        let t = |s: &str| is_terminal(&Configuration::parse(&a, s).unwrap(), &rules).unwrap();
        assert!(t("{A:1}"));
        assert!(!t("{A:1, B:1}"));
        assert!(t("{}"));
    }

    #[test]
    fn rule_text_round_trips_with_wire_species() {
        let a = Alphabet::new(["x[1]T", "y[1->4]F", "y[4]T"]).unwrap();
        for text in [
            "x[1]T + y[1->4]F -> .",
            "x[1]T + y[4]T -> y[4]T",
            "2 x[1]T -> .",
        ] {
            let r = Rule::parse(&a, text).unwrap();
            assert_eq!(r.display(&a).to_string(), text);
        }
    }
}
