//! Six-switch context-free grammar.
//!
//! A [`Structure`] is an order-free syntax tree: every phrase stores its
//! children in the order produced by the switch-0 rule, and [`linearize`]
//! reverses the children of a phrase whenever the switch governing its rule
//! is set. All switchable rules of the grammar are reversals of their
//! switch-0 counterpart, which is what makes this representation sufficient.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six constituent-order switches, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Switch {
    S = 0,
    Vp = 1,
    Comp = 2,
    Pp = 3,
    Np = 4,
    Rel = 5,
}

impl Switch {
    pub const ALL: [Switch; 6] = [
        Switch::S,
        Switch::Vp,
        Switch::Comp,
        Switch::Pp,
        Switch::Np,
        Switch::Rel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Switch::S => "S",
            Switch::Vp => "VP",
            Switch::Comp => "Comp",
            Switch::Pp => "PP",
            Switch::Np => "NP",
            Switch::Rel => "Rel",
        }
    }
}

/// A grammar: one bit per [`Switch`]. Text form is six `0`/`1` characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct SwitchVector([bool; 6]);

impl SwitchVector {
    pub fn new(bits: [bool; 6]) -> Self {
        SwitchVector(bits)
    }

    /// All 64 grammars, in numeric order of their text form.
    pub fn all() -> impl Iterator<Item = SwitchVector> {
        (0u8..64).map(|v| {
            let mut bits = [false; 6];
            for (i, b) in bits.iter_mut().enumerate() {
                *b = v & (1 << (5 - i)) != 0;
            }
            SwitchVector(bits)
        })
    }

    pub fn get(&self, s: Switch) -> bool {
        self.0[s as usize]
    }

    pub fn bits(&self) -> [bool; 6] {
        self.0
    }

    /// Copy with one switch flipped.
    pub fn flipped(&self, s: Switch) -> SwitchVector {
        let mut bits = self.0;
        bits[s as usize] = !bits[s as usize];
        SwitchVector(bits)
    }

    /// Switches on which `self` and `other` differ.
    pub fn differing(&self, other: &SwitchVector) -> Vec<Switch> {
        Switch::ALL
            .into_iter()
            .filter(|&s| self.get(s) != other.get(s))
            .collect()
    }
}

/// Parses the 6-character text form of a grammar.
pub fn parse_switches(text: &str) -> Result<SwitchVector> {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() != 6 {
        return Err(Error::Validation(format!(
            "switch vector {text:?} has length {}, expected 6",
            chars.len()
        )));
    }
    let mut bits = [false; 6];
    for (i, c) in chars.iter().enumerate() {
        bits[i] = match c {
            '0' => false,
            '1' => true,
            other => {
                return Err(Error::Validation(format!(
                    "switch vector {text:?}: invalid character {other:?} at position {i}"
                )))
            }
        };
    }
    Ok(SwitchVector(bits))
}

/// Number of switches on which two grammars differ.
pub fn hamming(a: &SwitchVector, b: &SwitchVector) -> u32 {
    a.0.iter().zip(b.0.iter()).filter(|(x, y)| x != y).count() as u32
}

impl FromStr for SwitchVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_switches(s)
    }
}

impl fmt::Display for SwitchVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for SwitchVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SwitchVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_switches(&s).map_err(serde::de::Error::custom)
    }
}

/// Part-of-speech categories of the lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pos {
    Noun,
    Adj,
    TVerb,
    IVerb,
    VerbComp,
    Prep,
    Subj,
    Comp,
    Rel,
}

impl Pos {
    pub const ALL: [Pos; 9] = [
        Pos::Noun,
        Pos::Adj,
        Pos::TVerb,
        Pos::IVerb,
        Pos::VerbComp,
        Pos::Prep,
        Pos::Subj,
        Pos::Comp,
        Pos::Rel,
    ];

    /// Categories whose words carry a lexical field.
    pub const CONTENT: [Pos; 5] = [Pos::Noun, Pos::Adj, Pos::TVerb, Pos::IVerb, Pos::VerbComp];

    pub fn name(self) -> &'static str {
        match self {
            Pos::Noun => "Noun",
            Pos::Adj => "Adj",
            Pos::TVerb => "TVerb",
            Pos::IVerb => "IVerb",
            Pos::VerbComp => "VerbComp",
            Pos::Prep => "Prep",
            Pos::Subj => "Subj",
            Pos::Comp => "Comp",
            Pos::Rel => "Rel",
        }
    }

    pub fn from_name(name: &str) -> Option<Pos> {
        Pos::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn is_content(self) -> bool {
        Pos::CONTENT.contains(&self)
    }

    pub fn is_verb(self) -> bool {
        matches!(self, Pos::TVerb | Pos::IVerb | Pos::VerbComp)
    }

    /// Number of inflected forms a lemma of this category has.
    pub fn slot_count(self) -> usize {
        match self {
            Pos::Noun => 2,
            p if p.is_verb() => 4,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Number {
    S,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tense {
    Pres,
    Past,
}

/// A POS slot with its morphological features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Leaf {
    pub pos: Pos,
    pub number: Option<Number>,
    pub tense: Option<Tense>,
}

impl Leaf {
    pub fn plain(pos: Pos) -> Leaf {
        Leaf {
            pos,
            number: None,
            tense: None,
        }
    }

    pub fn noun(number: Number) -> Leaf {
        Leaf {
            pos: Pos::Noun,
            number: Some(number),
            tense: None,
        }
    }

    pub fn verb(pos: Pos, tense: Tense, number: Number) -> Leaf {
        debug_assert!(pos.is_verb());
        Leaf {
            pos,
            number: Some(number),
            tense: Some(tense),
        }
    }

    /// Index of the inflected form this leaf selects.
    ///
    /// Nouns: `[S, P]`. Verbs: `[PresS, PresP, PastS, PastP]`.
    pub fn slot(&self) -> usize {
        let n = match self.number {
            Some(Number::P) => 1,
            _ => 0,
        };
        match self.pos {
            Pos::Noun => n,
            p if p.is_verb() => match self.tense {
                Some(Tense::Past) => 2 + n,
                _ => n,
            },
            _ => 0,
        }
    }

    /// Surface POS label such as `NounS` or `VerbCompPresS`.
    pub fn tag(&self) -> String {
        let mut s = self.pos.name().to_string();
        if let Some(t) = self.tense {
            s.push_str(match t {
                Tense::Pres => "Pres",
                Tense::Past => "Past",
            });
        }
        if let Some(n) = self.number {
            s.push_str(match n {
                Number::S => "S",
                Number::P => "P",
            });
        }
        s
    }

    pub fn parse_tag(tag: &str) -> Option<Leaf> {
        // Longest category names first so "IVerb" is not read as "I".
        let mut cats = Pos::ALL;
        cats.sort_by_key(|p| std::cmp::Reverse(p.name().len()));
        let pos = cats.into_iter().find(|p| tag.starts_with(p.name()))?;
        let mut rest = &tag[pos.name().len()..];
        let mut tense = None;
        if pos.is_verb() {
            if let Some(r) = rest.strip_prefix("Pres") {
                tense = Some(Tense::Pres);
                rest = r;
            } else {
                rest = rest.strip_prefix("Past")?;
                tense = Some(Tense::Past);
            }
        }
        let number = match (pos == Pos::Noun || pos.is_verb(), rest) {
            (true, "S") => Some(Number::S),
            (true, "P") => Some(Number::P),
            (false, "") => None,
            _ => return None,
        };
        Some(Leaf { pos, number, tense })
    }
}

/// Grammar rules. Each phrase of a [`Structure`] is labelled with the rule
/// that produced it; the switch-0 child order is the stored order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// S → NP VP
    Sentence,
    /// VP → IVerb
    VpIntrans,
    /// VP → NP TVerb
    VpTrans,
    /// VP → S_Comp VerbComp
    VpComp,
    /// S_Comp → S Comp
    SComp,
    /// NP → Noun [Subj]
    NpBase,
    /// NP → Adj NP
    NpAdj,
    /// NP → PP NP
    NpPp,
    /// PP → NP Prep
    Pp,
    /// NP → VP Rel NP
    NpRel,
}

impl Rule {
    const ALL: [Rule; 10] = [
        Rule::Sentence,
        Rule::VpIntrans,
        Rule::VpTrans,
        Rule::VpComp,
        Rule::SComp,
        Rule::NpBase,
        Rule::NpAdj,
        Rule::NpPp,
        Rule::Pp,
        Rule::NpRel,
    ];

    /// The switch that reverses this rule's children, if any.
    pub fn switch(self) -> Option<Switch> {
        match self {
            Rule::Sentence => Some(Switch::S),
            Rule::VpTrans | Rule::VpComp => Some(Switch::Vp),
            Rule::SComp => Some(Switch::Comp),
            Rule::NpPp | Rule::Pp => Some(Switch::Pp),
            Rule::NpAdj => Some(Switch::Np),
            Rule::NpRel => Some(Switch::Rel),
            Rule::VpIntrans | Rule::NpBase => None,
        }
    }

    /// Nonterminal on the left-hand side.
    pub fn label(self) -> &'static str {
        match self {
            Rule::Sentence => "S",
            Rule::VpIntrans | Rule::VpTrans | Rule::VpComp => "VP",
            Rule::SComp => "S_Comp",
            Rule::NpBase | Rule::NpAdj | Rule::NpPp | Rule::NpRel => "NP",
            Rule::Pp => "PP",
        }
    }

    /// Identifier used in the s-expression form.
    pub fn id(self) -> &'static str {
        match self {
            Rule::Sentence => "S",
            Rule::VpIntrans => "VP.intr",
            Rule::VpTrans => "VP.tr",
            Rule::VpComp => "VP.comp",
            Rule::SComp => "S_Comp",
            Rule::NpBase => "NP.base",
            Rule::NpAdj => "NP.adj",
            Rule::NpPp => "NP.pp",
            Rule::Pp => "PP",
            Rule::NpRel => "NP.rel",
        }
    }

    fn from_id(id: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.id() == id)
    }

    /// Levels (this node included) needed to finish a minimal expansion.
    fn min_height(self) -> usize {
        match self {
            Rule::NpBase | Rule::VpIntrans => 2,
            Rule::Sentence | Rule::NpAdj | Rule::NpRel | Rule::VpTrans | Rule::Pp => 3,
            Rule::NpPp | Rule::SComp => 4,
            Rule::VpComp => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Phrase { rule: Rule, children: Vec<Node> },
    Leaf(Leaf),
}

impl Node {
    pub fn phrase(rule: Rule, children: Vec<Node>) -> Node {
        Node::Phrase { rule, children }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Phrase { children, .. } => {
                1 + children.iter().map(Node::depth).max().unwrap_or(0)
            }
        }
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Leaf>) {
        match self {
            Node::Leaf(l) => out.push(l),
            Node::Phrase { children, .. } => {
                for c in children {
                    c.collect_leaves(out);
                }
            }
        }
    }

    fn write_sexpr(&self, out: &mut String) {
        match self {
            Node::Leaf(l) => out.push_str(&l.tag()),
            Node::Phrase { rule, children } => {
                out.push('(');
                out.push_str(rule.id());
                for c in children {
                    out.push(' ');
                    c.write_sexpr(out);
                }
                out.push(')');
            }
        }
    }

    /// Number feature of the head noun of an NP.
    fn np_number(&self) -> Option<Number> {
        match self {
            Node::Phrase { rule, children } => match rule {
                Rule::NpBase => match children.first()? {
                    Node::Leaf(l) if l.pos == Pos::Noun => l.number,
                    _ => None,
                },
                Rule::NpAdj | Rule::NpPp => children.get(1)?.np_number(),
                Rule::NpRel => children.get(2)?.np_number(),
                _ => None,
            },
            Node::Leaf(_) => None,
        }
    }

    /// Number feature of the verb heading a VP.
    fn vp_number(&self) -> Option<Number> {
        match self {
            Node::Phrase { rule, children } => {
                let verb = match rule {
                    Rule::VpIntrans => children.first()?,
                    Rule::VpTrans | Rule::VpComp => children.get(1)?,
                    _ => return None,
                };
                match verb {
                    Node::Leaf(l) if l.pos.is_verb() => l.number,
                    _ => None,
                }
            }
            Node::Leaf(_) => None,
        }
    }

    fn agreement_holds(&self) -> bool {
        match self {
            Node::Leaf(_) => true,
            Node::Phrase { rule, children } => {
                let local = match rule {
                    Rule::Sentence => {
                        let subj = children.first().and_then(Node::np_number);
                        let verb = children.get(1).and_then(Node::vp_number);
                        subj.is_some() && subj == verb
                    }
                    Rule::NpRel => {
                        let verb = children.first().and_then(Node::vp_number);
                        let noun = children.get(2).and_then(Node::np_number);
                        verb.is_some() && verb == noun
                    }
                    _ => true,
                };
                local && children.iter().all(Node::agreement_holds)
            }
        }
    }

    fn order_into(&self, sw: &SwitchVector, next_leaf: &mut usize, out: &mut Vec<usize>) {
        match self {
            Node::Leaf(_) => {
                out.push(*next_leaf);
                *next_leaf += 1;
            }
            Node::Phrase { rule, children } => {
                let reverse = rule.switch().is_some_and(|s| sw.get(s));
                if !reverse {
                    for c in children {
                        c.order_into(sw, next_leaf, out);
                    }
                } else {
                    // Leaf indices are canonical (stored) order, so number
                    // each child's leaves first, then emit in reverse.
                    let mut parts = Vec::with_capacity(children.len());
                    for c in children {
                        let mut part = Vec::new();
                        c.order_into(sw, next_leaf, &mut part);
                        parts.push(part);
                    }
                    for part in parts.into_iter().rev() {
                        out.extend(part);
                    }
                }
            }
        }
    }
}

/// An order-free sentence structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    pub root: Node,
}

impl Structure {
    pub fn new(root: Node) -> Structure {
        Structure { root }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Leaves in stored (canonical) order.
    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// Every tensed verb agrees in number with its subject noun.
    pub fn agreement_holds(&self) -> bool {
        self.root.agreement_holds()
    }

    pub fn to_sexpr(&self) -> String {
        let mut s = String::new();
        self.root.write_sexpr(&mut s);
        s
    }

    pub fn from_sexpr(text: &str) -> Result<Structure> {
        let tokens: Vec<String> = text
            .replace('(', " ( ")
            .replace(')', " ) ")
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let mut pos = 0;
        let root = parse_node(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Parse(format!("trailing input in structure {text:?}")));
        }
        Ok(Structure { root })
    }
}

fn parse_node(tokens: &[String], pos: &mut usize) -> Result<Node> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| Error::Parse("unexpected end of structure".into()))?;
    *pos += 1;
    if tok == "(" {
        let id = tokens
            .get(*pos)
            .ok_or_else(|| Error::Parse("missing rule id".into()))?;
        let rule = Rule::from_id(id).ok_or_else(|| Error::Parse(format!("unknown rule {id:?}")))?;
        *pos += 1;
        let mut children = Vec::new();
        loop {
            match tokens.get(*pos).map(String::as_str) {
                Some(")") => {
                    *pos += 1;
                    break;
                }
                Some(_) => children.push(parse_node(tokens, pos)?),
                None => return Err(Error::Parse("unbalanced parentheses".into())),
            }
        }
        Ok(Node::Phrase { rule, children })
    } else if tok == ")" {
        Err(Error::Parse("unexpected ')'".into()))
    } else {
        Leaf::parse_tag(tok)
            .map(Node::Leaf)
            .ok_or_else(|| Error::Parse(format!("unknown POS tag {tok:?}")))
    }
}

/// Order in which a structure's leaves surface under `sw`, as indices into
/// [`Structure::leaves`].
pub fn linearize_leaves(st: &Structure, sw: &SwitchVector) -> Vec<usize> {
    let mut out = Vec::new();
    let mut next = 0;
    st.root.order_into(sw, &mut next, &mut out);
    out
}

/// POS-tag sequence of a structure under `sw`, without the final period.
pub fn linearize(st: &Structure, sw: &SwitchVector) -> Vec<String> {
    let leaves = st.leaves();
    linearize_leaves(st, sw)
        .into_iter()
        .map(|i| leaves[i].tag())
        .collect()
}

/// Probabilities and depth bound of the structure sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrammarConfig {
    pub adj_prob: f64,
    pub pp_prob: f64,
    pub rel_prob: f64,
    pub comp_prob: f64,
    /// Probability that a non-complement VP is transitive.
    pub transitive_prob: f64,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig {
            adj_prob: 0.35,
            pp_prob: 0.25,
            rel_prob: 0.2,
            comp_prob: 0.17,
            transitive_prob: 0.62,
            max_depth: 12,
            seed: 0,
        }
    }
}

impl GrammarConfig {
    /// No optional expansion ever fires: every structure is `Noun Subj IVerb`.
    pub fn minimal() -> Self {
        GrammarConfig {
            adj_prob: 0.0,
            pp_prob: 0.0,
            rel_prob: 0.0,
            comp_prob: 0.0,
            transitive_prob: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("adj_prob", self.adj_prob),
            ("pp_prob", self.pp_prob),
            ("rel_prob", self.rel_prob),
            ("comp_prob", self.comp_prob),
            ("transitive_prob", self.transitive_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        if self.max_depth < 3 {
            return Err(Error::Validation(format!(
                "max_depth = {} but a minimal sentence needs depth 3",
                self.max_depth
            )));
        }
        Ok(())
    }
}

const PAST_PROB: f64 = 0.5;
const PLURAL_PROB: f64 = 0.5;

/// Samples one structure. Optional expansions that would break the depth
/// bound are skipped.
pub fn sample_structure<R: Rng + ?Sized>(cfg: &GrammarConfig, rng: &mut R) -> Structure {
    let mut s = Sampler { cfg, rng };
    Structure {
        root: s.sentence(1),
    }
}

struct Sampler<'a, R: ?Sized> {
    cfg: &'a GrammarConfig,
    rng: &'a mut R,
}

impl<R: Rng + ?Sized> Sampler<'_, R> {
    fn fits(&self, rule: Rule, level: usize) -> bool {
        level + rule.min_height() - 1 <= self.cfg.max_depth
    }

    fn fire(&mut self, rule: Rule, level: usize, p: f64) -> bool {
        // Always draw so the stream does not depend on the depth bound.
        let u: f64 = self.rng.random();
        u < p && self.fits(rule, level)
    }

    fn number(&mut self) -> Number {
        if self.rng.random_bool(PLURAL_PROB) {
            Number::P
        } else {
            Number::S
        }
    }

    fn tense(&mut self) -> Tense {
        if self.rng.random_bool(PAST_PROB) {
            Tense::Past
        } else {
            Tense::Pres
        }
    }

    fn sentence(&mut self, level: usize) -> Node {
        let (np, number) = self.np(level + 1, true);
        let vp = self.vp(level + 1, number);
        Node::phrase(Rule::Sentence, vec![np, vp])
    }

    fn np_base(&mut self, subject: bool, number: Number) -> Node {
        let mut children = vec![Node::Leaf(Leaf::noun(number))];
        if subject {
            children.push(Node::Leaf(Leaf::plain(Pos::Subj)));
        }
        Node::phrase(Rule::NpBase, children)
    }

    fn np(&mut self, level: usize, subject: bool) -> (Node, Number) {
        let (adj, pp, rel) = (self.cfg.adj_prob, self.cfg.pp_prob, self.cfg.rel_prob);
        if self.fire(Rule::NpAdj, level, adj) {
            let (inner, n) = self.np(level + 1, subject);
            let node = Node::phrase(Rule::NpAdj, vec![Node::Leaf(Leaf::plain(Pos::Adj)), inner]);
            return (node, n);
        }
        if self.fire(Rule::NpPp, level, pp) {
            let (obj, _) = self.np(level + 2, false);
            let pp = Node::phrase(Rule::Pp, vec![obj, Node::Leaf(Leaf::plain(Pos::Prep))]);
            let (inner, n) = self.np(level + 1, subject);
            return (Node::phrase(Rule::NpPp, vec![pp, inner]), n);
        }
        if self.fire(Rule::NpRel, level, rel) {
            let n = self.number();
            let vp = self.vp(level + 1, n);
            let head = self.np_base(subject, n);
            let node = Node::phrase(Rule::NpRel, vec![vp, Node::Leaf(Leaf::plain(Pos::Rel)), head]);
            return (node, n);
        }
        let n = self.number();
        (self.np_base(subject, n), n)
    }

    fn vp(&mut self, level: usize, number: Number) -> Node {
        let (comp, trans) = (self.cfg.comp_prob, self.cfg.transitive_prob);
        if self.fire(Rule::VpComp, level, comp) {
            let clause = self.sentence(level + 2);
            let scomp = Node::phrase(Rule::SComp, vec![clause, Node::Leaf(Leaf::plain(Pos::Comp))]);
            let t = self.tense();
            return Node::phrase(
                Rule::VpComp,
                vec![scomp, Node::Leaf(Leaf::verb(Pos::VerbComp, t, number))],
            );
        }
        if self.fire(Rule::VpTrans, level, trans) {
            let (obj, _) = self.np(level + 1, false);
            let t = self.tense();
            return Node::phrase(
                Rule::VpTrans,
                vec![obj, Node::Leaf(Leaf::verb(Pos::TVerb, t, number))],
            );
        }
        let t = self.tense();
        Node::phrase(
            Rule::VpIntrans,
            vec![Node::Leaf(Leaf::verb(Pos::IVerb, t, number))],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sw(s: &str) -> SwitchVector {
        parse_switches(s).unwrap()
    }

    /// NounS Subj VerbCompPresS, the first example structure.
    fn burse_sub_lurchifies() -> Structure {
        Structure::new(Node::phrase(
            Rule::Sentence,
            vec![
                Node::phrase(
                    Rule::NpBase,
                    vec![
                        Node::Leaf(Leaf::noun(Number::S)),
                        Node::Leaf(Leaf::plain(Pos::Subj)),
                    ],
                ),
                Node::phrase(
                    Rule::VpIntrans,
                    vec![Node::Leaf(Leaf::verb(Pos::VerbComp, Tense::Pres, Number::S))],
                ),
            ],
        ))
    }

    #[test]
    fn parse_switch_examples() {
        assert_eq!(sw("000000").bits(), [false; 6]);
        let v = sw("100010");
        assert!(v.get(Switch::S) && v.get(Switch::Np));
        assert_eq!(v.bits().iter().filter(|b| **b).count(), 2);
        assert_eq!(v.to_string(), "100010");
    }

    #[test]
    fn parse_switch_errors_name_position() {
        let e = parse_switches("00000").unwrap_err().to_string();
        assert!(e.contains("length 5"), "{e}");
        let e = parse_switches("0010x0").unwrap_err().to_string();
        assert!(e.contains("position 4"), "{e}");
        assert!(parse_switches("0000000").is_err());
    }

    #[test]
    fn hamming_examples() {
        let x = sw("011101");
        assert_eq!(hamming(&x, &x), 0);
        assert_eq!(hamming(&sw("000000"), &sw("111111")), 6);
        assert_eq!(hamming(&sw("000000"), &sw("100010")), 2);
    }

    #[test]
    fn hamming_is_a_metric_on_all_grammars() {
        let all: Vec<_> = SwitchVector::all().collect();
        assert_eq!(all.len(), 64);
        for a in &all {
            for b in &all {
                let d = hamming(a, b);
                assert_eq!(d, hamming(b, a));
                assert_eq!(d == 0, a == b);
                for c in &all {
                    assert!(hamming(a, c) <= d + hamming(b, c));
                }
            }
        }
    }

    #[test]
    fn tags_round_trip() {
        for tag in ["NounS", "NounP", "Adj", "VerbCompPresS", "IVerbPastP", "TVerbPresP", "Subj", "Prep"] {
            assert_eq!(Leaf::parse_tag(tag).unwrap().tag(), tag);
        }
        assert!(Leaf::parse_tag("Noun").is_none());
        assert!(Leaf::parse_tag("IVerbS").is_none());
        assert!(Leaf::parse_tag("AdjS").is_none());
    }

    #[test]
    fn linearize_s_switch_example() {
        let st = burse_sub_lurchifies();
        assert_eq!(linearize(&st, &sw("000000")), ["NounS", "Subj", "VerbCompPresS"]);
        assert_eq!(linearize(&st, &sw("100000")), ["VerbCompPresS", "NounS", "Subj"]);
        assert_eq!(linearize(&st, &sw("100010")), ["VerbCompPresS", "NounS", "Subj"]);
    }

    #[test]
    fn linearize_np_switch_moves_adjective() {
        let np = Node::phrase(
            Rule::NpAdj,
            vec![
                Node::Leaf(Leaf::plain(Pos::Adj)),
                Node::phrase(
                    Rule::NpBase,
                    vec![
                        Node::Leaf(Leaf::noun(Number::P)),
                        Node::Leaf(Leaf::plain(Pos::Subj)),
                    ],
                ),
            ],
        );
        let st = Structure::new(Node::phrase(
            Rule::Sentence,
            vec![
                np,
                Node::phrase(
                    Rule::VpIntrans,
                    vec![Node::Leaf(Leaf::verb(Pos::IVerb, Tense::Past, Number::P))],
                ),
            ],
        ));
        assert_eq!(
            linearize(&st, &sw("000000")),
            ["Adj", "NounP", "Subj", "IVerbPastP"]
        );
        assert_eq!(
            linearize(&st, &sw("000010")),
            ["NounP", "Subj", "Adj", "IVerbPastP"]
        );
        assert_eq!(
            linearize(&st, &sw("100010")),
            ["IVerbPastP", "NounP", "Subj", "Adj"]
        );
        let st2 = st.clone();
        assert_eq!(linearize(&st, &sw("101010")), linearize(&st2, &sw("101010")));
    }

    #[test]
    fn minimal_config_gives_minimal_tree() {
        let cfg = GrammarConfig::minimal();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let st = sample_structure(&cfg, &mut rng);
            let tags = linearize(&st, &SwitchVector::default());
            assert_eq!(tags.len(), 3);
            assert!(tags[0].starts_with("Noun") && tags[1] == "Subj" && tags[2].starts_with("IVerb"));
            assert_eq!(st.depth(), 3);
        }
    }

    #[test]
    fn same_seed_same_tree() {
        let cfg = GrammarConfig::default();
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..20).map(|_| sample_structure(&cfg, &mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..20).map(|_| sample_structure(&cfg, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn depth_bound_and_agreement_over_many_samples() {
        let cfg = GrammarConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let st = sample_structure(&cfg, &mut rng);
            assert!(st.depth() <= cfg.max_depth);
            assert!(st.agreement_holds(), "{}", st.to_sexpr());
        }
    }

    #[test]
    fn depth_bound_is_enforced_with_aggressive_recursion() {
        let cfg = GrammarConfig {
            adj_prob: 0.9,
            pp_prob: 0.9,
            rel_prob: 0.9,
            comp_prob: 0.9,
            max_depth: 6,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2_000 {
            let st = sample_structure(&cfg, &mut rng);
            assert!(st.depth() <= 6);
            assert!(st.agreement_holds());
        }
    }

    #[test]
    fn config_validation() {
        assert!(GrammarConfig::default().validate().is_ok());
        let bad = GrammarConfig {
            max_depth: 2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = GrammarConfig {
            pp_prob: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sexpr_round_trip() {
        let cfg = GrammarConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let st = sample_structure(&cfg, &mut rng);
            let back = Structure::from_sexpr(&st.to_sexpr()).unwrap();
            assert_eq!(back, st);
        }
        assert!(Structure::from_sexpr("(S NounS").is_err());
        assert!(Structure::from_sexpr("(XX NounS)").is_err());
    }
}
