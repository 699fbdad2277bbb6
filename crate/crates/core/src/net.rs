//! Place/transition nets and their token game.
//!
//! Identifiers are interned when a net is built: places and transitions are
//! addressed by dense [`PlaceId`] / [`TransId`] indices, in declaration order.
//! Arc weights are stored sparsely, sorted by place, with zero weights absent.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Dense index of a place in a [`Net`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId(pub(crate) u32);

/// Dense index of a transition in a [`Net`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransId(pub(crate) u32);

impl PlaceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(ix: usize) -> Self {
        PlaceId(ix as u32)
    }
}

impl TransId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(ix: usize) -> Self {
        TransId(ix as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("transition `{transition}` is not enabled: place `{place}` holds {have} token(s), needs {need}")]
    NotEnabled {
        transition: String,
        place: String,
        have: u64,
        need: u64,
    },
    #[error("identifier `{0}` is declared twice")]
    Duplicate(String),
    #[error("identifier `{0}` names both a place and a transition")]
    PlaceTransitionClash(String),
    #[error("place `{0}` cannot be a sum of itself")]
    SelfSum(String),
    #[error("place `{0}` has conflicting initial markings")]
    ConflictingMarking(String),
}

/// A marking: tokens per place, stored sparsely with zero entries absent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking {
    entries: Vec<(PlaceId, u64)>,
}

impl Marking {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a marking from arbitrary pairs; repeated places are summed.
    pub fn from_pairs<I: IntoIterator<Item = (PlaceId, u64)>>(pairs: I) -> Self {
        let mut entries: Vec<(PlaceId, u64)> = pairs.into_iter().filter(|e| e.1 > 0).collect();
        entries.sort_unstable_by_key(|e| e.0);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        Marking { entries }
    }

    /// Builds a marking from a dense vector indexed by place.
    pub fn from_dense(values: &[u64]) -> Self {
        Marking {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0)
                .map(|(i, &v)| (PlaceId::from_index(i), v))
                .collect(),
        }
    }

    pub fn to_dense(&self, num_places: usize) -> Vec<u64> {
        let mut out = vec![0; num_places];
        for &(p, v) in &self.entries {
            out[p.index()] = v;
        }
        out
    }

    pub fn get(&self, p: PlaceId) -> u64 {
        match self.entries.binary_search_by_key(&p, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn set(&mut self, p: PlaceId, value: u64) {
        match self.entries.binary_search_by_key(&p, |e| e.0) {
            Ok(i) if value == 0 => {
                self.entries.remove(i);
            }
            Ok(i) => self.entries[i].1 = value,
            Err(i) if value > 0 => self.entries.insert(i, (p, value)),
            Err(_) => {}
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (PlaceId, u64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Pointwise `self >= other`.
    pub fn covers(&self, other: &Marking) -> bool {
        other.iter().all(|(p, v)| self.get(p) >= v)
    }
}

/// A signed marking change, sparse with zero entries absent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Displacement {
    entries: Vec<(PlaceId, i64)>,
}

impl Displacement {
    pub fn from_pairs<I: IntoIterator<Item = (PlaceId, i64)>>(pairs: I) -> Self {
        let mut acc: Vec<(PlaceId, i64)> = pairs.into_iter().collect();
        acc.sort_unstable_by_key(|e| e.0);
        let mut entries: Vec<(PlaceId, i64)> = Vec::with_capacity(acc.len());
        for (p, v) in acc {
            match entries.last_mut() {
                Some(last) if last.0 == p => last.1 += v,
                _ => entries.push((p, v)),
            }
        }
        entries.retain(|e| e.1 != 0);
        Displacement { entries }
    }

    pub fn get(&self, p: PlaceId) -> i64 {
        match self.entries.binary_search_by_key(&p, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (PlaceId, i64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&self, other: &Displacement) -> Displacement {
        Displacement::from_pairs(self.iter().chain(other.iter()))
    }

    pub fn scale(&self, k: i64) -> Displacement {
        Displacement::from_pairs(self.iter().map(|(p, v)| (p, v * k)))
    }
}

/// An ordered list of transitions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FiringSequence {
    pub steps: Vec<TransId>,
}

impl FiringSequence {
    pub fn new(steps: Vec<TransId>) -> Self {
        FiringSequence { steps }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Arcs of one transition: `(place, weight)` sorted by place, weights > 0.
pub type Arcs = Vec<(PlaceId, u64)>;

/// A marked place/transition net `(P, T, Pre, Post, m0)`.
#[derive(Clone, Debug)]
pub struct Net {
    name: String,
    places: Vec<String>,
    transitions: Vec<String>,
    place_ix: HashMap<String, PlaceId>,
    trans_ix: HashMap<String, TransId>,
    pre: Vec<Arcs>,
    post: Vec<Arcs>,
    m0: Vec<u64>,
}

impl PartialEq for Net {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.places == other.places
            && self.transitions == other.transitions
            && self.pre == other.pre
            && self.post == other.post
            && self.m0 == other.m0
    }
}

impl Eq for Net {}

fn normalize_arcs(mut arcs: Vec<(PlaceId, u64)>) -> Arcs {
    arcs.sort_unstable_by_key(|a| a.0);
    let mut out: Arcs = Vec::with_capacity(arcs.len());
    for (p, w) in arcs {
        match out.last_mut() {
            Some(last) if last.0 == p => last.1 += w,
            _ => out.push((p, w)),
        }
    }
    out.retain(|a| a.1 > 0);
    out
}

fn arc_weight(arcs: &Arcs, p: PlaceId) -> u64 {
    match arcs.binary_search_by_key(&p, |a| a.0) {
        Ok(i) => arcs[i].1,
        Err(_) => 0,
    }
}

/// Producers (`•p`) and consumers (`p•`) of every place.
#[derive(Clone, Debug)]
pub struct Adjacency {
    pub producers: Vec<Vec<TransId>>,
    pub consumers: Vec<Vec<TransId>>,
}

impl Net {
    /// An empty net (no places, no transitions).
    pub fn new(name: impl Into<String>) -> Self {
        Net {
            name: name.into(),
            places: Vec::new(),
            transitions: Vec::new(),
            place_ix: HashMap::new(),
            trans_ix: HashMap::new(),
            pre: Vec::new(),
            post: Vec::new(),
            m0: Vec::new(),
        }
    }

    pub fn builder(name: impl Into<String>) -> NetBuilder {
        NetBuilder::new(name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_places(&self) -> usize {
        self.places.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn place_ids(&self) -> impl Iterator<Item = PlaceId> + Clone {
        (0..self.places.len()).map(PlaceId::from_index)
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = TransId> + Clone {
        (0..self.transitions.len()).map(TransId::from_index)
    }

    pub fn place_name(&self, p: PlaceId) -> &str {
        &self.places[p.index()]
    }

    pub fn transition_name(&self, t: TransId) -> &str {
        &self.transitions[t.index()]
    }

    pub fn place_names(&self) -> &[String] {
        &self.places
    }

    pub fn transition_names(&self) -> &[String] {
        &self.transitions
    }

    pub fn place(&self, name: &str) -> Result<PlaceId, NetError> {
        self.place_ix
            .get(name)
            .copied()
            .ok_or_else(|| NetError::UnknownPlace(name.to_string()))
    }

    pub fn transition(&self, name: &str) -> Result<TransId, NetError> {
        self.trans_ix
            .get(name)
            .copied()
            .ok_or_else(|| NetError::UnknownTransition(name.to_string()))
    }

    pub fn has_name(&self, name: &str) -> bool {
        self.place_ix.contains_key(name) || self.trans_ix.contains_key(name)
    }

    pub fn pre(&self, t: TransId) -> &Arcs {
        &self.pre[t.index()]
    }

    pub fn post(&self, t: TransId) -> &Arcs {
        &self.post[t.index()]
    }

    pub fn pre_weight(&self, t: TransId, p: PlaceId) -> u64 {
        arc_weight(&self.pre[t.index()], p)
    }

    pub fn post_weight(&self, t: TransId, p: PlaceId) -> u64 {
        arc_weight(&self.post[t.index()], p)
    }

    pub fn initial(&self, p: PlaceId) -> u64 {
        self.m0[p.index()]
    }

    pub fn initial_marking(&self) -> Marking {
        Marking::from_dense(&self.m0)
    }

    pub fn initial_dense(&self) -> &[u64] {
        &self.m0
    }

    /// `Δ(t)` as a sparse displacement.
    pub fn delta(&self, t: TransId) -> Displacement {
        Displacement::from_pairs(
            self.pre(t)
                .iter()
                .map(|&(p, w)| (p, -(w as i64)))
                .chain(self.post(t).iter().map(|&(p, w)| (p, w as i64))),
        )
    }

    /// `Δ(t)(p)`.
    pub fn delta_at(&self, t: TransId, p: PlaceId) -> i64 {
        self.post_weight(t, p) as i64 - self.pre_weight(t, p) as i64
    }

    pub fn adjacency(&self) -> Adjacency {
        let mut producers = vec![Vec::new(); self.places.len()];
        let mut consumers = vec![Vec::new(); self.places.len()];
        for t in self.transition_ids() {
            for &(p, _) in self.pre(t) {
                consumers[p.index()].push(t);
            }
            for &(p, _) in self.post(t) {
                producers[p.index()].push(t);
            }
        }
        Adjacency {
            producers,
            consumers,
        }
    }

    fn check_transition(&self, t: TransId) -> Result<(), NetError> {
        if t.index() < self.transitions.len() {
            Ok(())
        } else {
            Err(NetError::UnknownTransition(format!("#{}", t.0)))
        }
    }

    fn check_place(&self, p: PlaceId) -> Result<(), NetError> {
        if p.index() < self.places.len() {
            Ok(())
        } else {
            Err(NetError::UnknownPlace(format!("#{}", p.0)))
        }
    }

    /// `m ≥ Pre(t)`.
    pub fn enabled(&self, m: &Marking, t: TransId) -> Result<bool, NetError> {
        self.check_transition(t)?;
        Ok(self.pre(t).iter().all(|&(p, w)| m.get(p) >= w))
    }

    /// `m − Pre(t) + Post(t)`, or an error naming the first blocking place.
    pub fn fire(&self, m: &Marking, t: TransId) -> Result<Marking, NetError> {
        self.check_transition(t)?;
        for &(p, w) in self.pre(t) {
            let have = m.get(p);
            if have < w {
                return Err(NetError::NotEnabled {
                    transition: self.transition_name(t).to_string(),
                    place: self.place_name(p).to_string(),
                    have,
                    need: w,
                });
            }
        }
        let mut out = m.clone();
        for &(p, w) in self.pre(t) {
            out.set(p, out.get(p) - w);
        }
        for &(p, w) in self.post(t) {
            out.set(p, out.get(p) + w);
        }
        Ok(out)
    }

    /// Dense-vector firing used on hot paths; the caller guarantees enabling.
    pub(crate) fn fire_dense_unchecked(&self, m: &mut [u64], t: TransId) {
        for &(p, w) in self.pre(t) {
            m[p.index()] -= w;
        }
        for &(p, w) in self.post(t) {
            m[p.index()] += w;
        }
    }

    pub(crate) fn enabled_dense(&self, m: &[u64], t: TransId) -> bool {
        self.pre(t).iter().all(|&(p, w)| m[p.index()] >= w)
    }

    /// `Δ(σ)`, the pointwise sum of `Post(t) − Pre(t)` over the sequence.
    pub fn displacement(&self, sigma: &FiringSequence) -> Result<Displacement, NetError> {
        let mut pairs = Vec::new();
        for &t in &sigma.steps {
            self.check_transition(t)?;
            pairs.extend(self.pre(t).iter().map(|&(p, w)| (p, -(w as i64))));
            pairs.extend(self.post(t).iter().map(|&(p, w)| (p, w as i64)));
        }
        Ok(Displacement::from_pairs(pairs))
    }

    /// `H(σ)`: the least marking from which `σ` is firable.
    ///
    /// Forward recurrence `H(σ·t) = max(H(σ), Pre(t) − Δ(σ))`, clamped at 0.
    pub fn hurdle(&self, sigma: &FiringSequence) -> Result<Marking, NetError> {
        let n = self.places.len();
        let mut hurdle = vec![0u64; n];
        let mut delta = vec![0i64; n];
        for &t in &sigma.steps {
            self.check_transition(t)?;
            for &(p, w) in self.pre(t) {
                let need = w as i64 - delta[p.index()];
                if need > hurdle[p.index()] as i64 {
                    hurdle[p.index()] = need as u64;
                }
            }
            for &(p, w) in self.pre(t) {
                delta[p.index()] -= w as i64;
            }
            for &(p, w) in self.post(t) {
                delta[p.index()] += w as i64;
            }
        }
        Ok(Marking::from_dense(&hurdle))
    }

    /// Whether `a = ⊞ parts`: initial marking, pre- and post-weights of `a` are
    /// the sums of those of `parts`.
    pub fn is_sum_place(&self, a: PlaceId, parts: &[PlaceId]) -> Result<bool, NetError> {
        self.check_place(a)?;
        for &p in parts {
            self.check_place(p)?;
            if p == a {
                return Err(NetError::SelfSum(self.place_name(a).to_string()));
            }
        }
        let m0: u64 = parts.iter().map(|&p| self.initial(p)).sum();
        if m0 != self.initial(a) {
            return Ok(false);
        }
        Ok(self.transition_ids().all(|t| {
            let pre: u64 = parts.iter().map(|&p| self.pre_weight(t, p)).sum();
            let post: u64 = parts.iter().map(|&p| self.post_weight(t, p)).sum();
            pre == self.pre_weight(t, a) && post == self.post_weight(t, a)
        }))
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty() && self.transitions.is_empty()
    }

    /// Name-keyed view of a marking, for diagnostics and cross-net comparisons.
    pub fn marking_to_string(&self, m: &Marking) -> String {
        m.iter()
            .map(|(p, v)| format!("{}:{}", self.place_name(p), v))
            .collect::<Vec<_>>()
            .join(" ")
    }

    // ----- in-place edits used by the reduction engine -----

    /// Keeps only flagged places and transitions, reindexing densely in order.
    pub(crate) fn retain(&mut self, keep_place: &[bool], keep_trans: &[bool]) {
        let mut place_map = vec![None; self.places.len()];
        let mut next = 0u32;
        for (i, &k) in keep_place.iter().enumerate() {
            if k {
                place_map[i] = Some(PlaceId(next));
                next += 1;
            }
        }
        let remap = |arcs: &Arcs| -> Arcs {
            arcs.iter()
                .filter_map(|&(p, w)| place_map[p.index()].map(|np| (np, w)))
                .collect()
        };
        let mut pre = Vec::new();
        let mut post = Vec::new();
        let mut transitions = Vec::new();
        for (i, name) in self.transitions.iter().enumerate() {
            if keep_trans[i] {
                pre.push(remap(&self.pre[i]));
                post.push(remap(&self.post[i]));
                transitions.push(name.clone());
            }
        }
        let mut places = Vec::new();
        let mut m0 = Vec::new();
        for (i, name) in self.places.iter().enumerate() {
            if keep_place[i] {
                places.push(name.clone());
                m0.push(self.m0[i]);
            }
        }
        self.places = places;
        self.transitions = transitions;
        self.pre = pre;
        self.post = post;
        self.m0 = m0;
        self.reindex();
    }

    fn reindex(&mut self) {
        self.place_ix = self
            .places
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), PlaceId::from_index(i)))
            .collect();
        self.trans_ix = self
            .transitions
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), TransId::from_index(i)))
            .collect();
    }

    pub(crate) fn remove_places(&mut self, ps: &[PlaceId]) {
        let mut keep_place = vec![true; self.places.len()];
        for p in ps {
            keep_place[p.index()] = false;
        }
        let keep_trans = vec![true; self.transitions.len()];
        self.retain(&keep_place, &keep_trans);
    }

    pub(crate) fn remove_transitions(&mut self, ts: &[TransId]) {
        let keep_place = vec![true; self.places.len()];
        let mut keep_trans = vec![true; self.transitions.len()];
        for t in ts {
            keep_trans[t.index()] = false;
        }
        self.retain(&keep_place, &keep_trans);
    }

    pub(crate) fn set_initial_marking(&mut self, m: &Marking) {
        self.m0 = m.to_dense(self.places.len());
    }

    /// Replaces `parts` by a fresh place whose arcs and initial marking are
    /// their sums. The fresh place is appended after the surviving places.
    pub(crate) fn merge_places(&mut self, parts: &[PlaceId], fresh: &str) -> PlaceId {
        let new_ix = PlaceId::from_index(self.places.len());
        self.places.push(fresh.to_string());
        self.m0.push(parts.iter().map(|&p| self.m0[p.index()]).sum());
        for t in 0..self.transitions.len() {
            for arcs in [&mut self.pre[t], &mut self.post[t]] {
                let w: u64 = arcs
                    .iter()
                    .filter(|a| parts.contains(&a.0))
                    .map(|a| a.1)
                    .sum();
                if w > 0 {
                    arcs.push((new_ix, w));
                }
            }
        }
        self.place_ix.insert(fresh.to_string(), new_ix);
        self.remove_places(parts);
        self.place(fresh).expect("fresh place was just inserted")
    }
}

impl fmt::Display for Net {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::serialize_net(self))
    }
}

/// Incremental construction of a [`Net`] by name.
///
/// Places referenced by transitions before being declared are created with an
/// empty initial marking. Repeated arcs on the same `(t, p)` pair add up.
#[derive(Clone, Debug)]
pub struct NetBuilder {
    net: Net,
    declared: Vec<bool>,
}

impl NetBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetBuilder {
            net: Net::new(name),
            declared: Vec::new(),
        }
    }

    pub fn name(&mut self, name: impl Into<String>) -> &mut Self {
        self.net.name = name.into();
        self
    }

    fn intern_place(&mut self, name: &str) -> Result<PlaceId, NetError> {
        if self.net.trans_ix.contains_key(name) {
            return Err(NetError::PlaceTransitionClash(name.to_string()));
        }
        if let Some(&p) = self.net.place_ix.get(name) {
            return Ok(p);
        }
        let p = PlaceId::from_index(self.net.places.len());
        self.net.places.push(name.to_string());
        self.net.m0.push(0);
        self.net.place_ix.insert(name.to_string(), p);
        self.declared.push(false);
        Ok(p)
    }

    /// Declares a place with its initial marking. Re-declaring with the same
    /// marking is accepted; a different marking is an error.
    pub fn add_place(&mut self, name: &str, tokens: u64) -> Result<PlaceId, NetError> {
        let p = self.intern_place(name)?;
        let ix = p.index();
        if self.declared[ix] {
            if self.net.m0[ix] != tokens {
                return Err(NetError::ConflictingMarking(name.to_string()));
            }
        } else if self.net.m0[ix] != 0 && self.net.m0[ix] != tokens {
            return Err(NetError::ConflictingMarking(name.to_string()));
        }
        self.declared[ix] = true;
        self.net.m0[ix] = tokens;
        Ok(p)
    }

    pub fn add_transition(
        &mut self,
        name: &str,
        inputs: &[(&str, u64)],
        outputs: &[(&str, u64)],
    ) -> Result<TransId, NetError> {
        if self.net.trans_ix.contains_key(name) {
            return Err(NetError::Duplicate(name.to_string()));
        }
        if self.net.place_ix.contains_key(name) {
            return Err(NetError::PlaceTransitionClash(name.to_string()));
        }
        let t = TransId::from_index(self.net.transitions.len());
        self.net.transitions.push(name.to_string());
        self.net.trans_ix.insert(name.to_string(), t);
        let mut pre = Vec::new();
        for &(p, w) in inputs {
            pre.push((self.intern_place(p)?, w));
        }
        let mut post = Vec::new();
        for &(p, w) in outputs {
            post.push((self.intern_place(p)?, w));
        }
        self.net.pre.push(normalize_arcs(pre));
        self.net.post.push(normalize_arcs(post));
        Ok(t)
    }

    /// Chainable place declaration; panics on error (convenient for fixtures).
    pub fn place(mut self, name: &str, tokens: u64) -> Self {
        self.add_place(name, tokens).expect("invalid place declaration");
        self
    }

    /// Chainable transition declaration; panics on error (convenient for fixtures).
    pub fn transition(mut self, name: &str, inputs: &[(&str, u64)], outputs: &[(&str, u64)]) -> Self {
        self.add_transition(name, inputs, outputs)
            .expect("invalid transition declaration");
        self
    }

    pub fn build(self) -> Net {
        self.net
    }
}
