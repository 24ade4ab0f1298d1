//! Incremental machinery behind the training loop.
//!
//! Entries are indexed by (tag, reversed form) so that the entries a rule
//! applies to form one contiguous range. Candidates are materialized lazily
//! from the entries that are currently wrong; their support (which never
//! changes) is computed on a single range scan, and their net gain is kept
//! current through per-entry deltas whenever an accepted rule moves an entry
//! to a new producer. Eligible candidates live in an ordered selection set
//! whose maximum is the next rule to accept.
//!
//! All of this is observationally equivalent to rescanning every candidate
//! each iteration; the test suite checks that against a brute-force
//! reference on randomized lexicons.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use crate::lexicon::TrainingSet;
use crate::par::{self, Threading};
use crate::rules::{Rule, Transform};
use crate::ruleset::ExceptionTable;

use super::{suffix_byte_starts, TrainConfig, TrainError};

type TagId = u32;
type CandId = u32;

/// One training row plus its mutable prediction state. The prediction
/// itself is implicit: `spec` is the match-suffix length of the producing
/// rule (−1 for the identity baseline) and `correct` says whether that
/// producer yields the lemma.
struct Ent {
    form: Arc<str>,
    lemma: Arc<str>,
    /// `form` with its code points reversed; key of the suffix index.
    rev: Box<str>,
    tag: TagId,
    boundaries: Box<[usize]>,
    /// Byte length of the common prefix of form and lemma; the minimal
    /// transform is (form[prefix..] → lemma[prefix..]).
    prefix_bytes: usize,
    /// Code-point length of the minimal transform source: the shortest
    /// suffix this entry generates candidates for.
    min_suffix_cp: usize,
    spec: i32,
    correct: bool,
}

struct Cand {
    suffix: Arc<str>,
    tag: TagId,
    source: Arc<str>,
    replacement: Arc<str>,
    suffix_cp: u32,
    /// Entries this candidate lemmatizes correctly among all it applies to.
    /// State-independent; computed once.
    support: u32,
    /// Currently-wrong entries that generate this exact candidate.
    generators: u32,
    /// Net errors removed if accepted now; kept current via deltas.
    gain: i64,
    scored: bool,
    /// Key (suffix, tag) already accepted; permanently excluded.
    dead: bool,
    in_sel: bool,
}

/// Selection-set key. `BTreeSet::last()` must be the candidate to accept,
/// so the ordering ranks by gain, then support, then *shorter* suffix, then
/// *smaller* (tag, suffix, source, replacement).
#[derive(Clone)]
struct SelKey {
    gain: i64,
    support: u32,
    suffix_cp: u32,
    tag: Arc<str>,
    suffix: Arc<str>,
    source: Arc<str>,
    replacement: Arc<str>,
    cand: CandId,
}

impl SelKey {
    fn lex(&self) -> (&str, &str, &str, &str) {
        (&self.tag, &self.suffix, &self.source, &self.replacement)
    }
}

impl Ord for SelKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .cmp(&other.gain)
            .then_with(|| self.support.cmp(&other.support))
            .then_with(|| other.suffix_cp.cmp(&self.suffix_cp))
            .then_with(|| other.lex().cmp(&self.lex()))
    }
}

impl PartialOrd for SelKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for SelKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SelKey {}

#[derive(Default)]
struct StrPool(HashSet<Arc<str>>);

impl StrPool {
    fn intern(&mut self, s: &str) -> Arc<str> {
        if let Some(hit) = self.0.get(s) {
            return hit.clone();
        }
        let fresh: Arc<str> = Arc::from(s);
        self.0.insert(fresh.clone());
        fresh
    }
}

pub(super) struct Session {
    min_support: u32,
    threading: Threading,
    entries: Vec<Ent>,
    /// Entry ids sorted by (tag, reversed form): rule application ranges.
    order: Vec<u32>,
    tag_names: Vec<Arc<str>>,
    pool: StrPool,
    cands: Vec<Cand>,
    by_suffix: HashMap<Arc<str>, HashMap<TagId, Vec<CandId>>>,
    sel: BTreeSet<SelKey>,
    accepted: Vec<CandId>,
    error_count: usize,
    error_curve: Vec<usize>,
}

fn contrib(correct: bool, spec: i32, cand_cp: u32, fixes: bool) -> i64 {
    if cand_cp as i32 <= spec {
        0
    } else if !correct && fixes {
        1
    } else if correct && !fixes {
        -1
    } else {
        0
    }
}

/// Does rewriting `form`'s trailing `source` to `replacement` yield `lemma`?
/// Callers guarantee `source` is a suffix of `form`.
fn rewrite_hits(source: &str, replacement: &str, form: &str, lemma: &str) -> bool {
    let (f, l) = (form.as_bytes(), lemma.as_bytes());
    debug_assert!(f.ends_with(source.as_bytes()));
    let stem = f.len() - source.len();
    l.len() == stem + replacement.len()
        && l[..stem] == f[..stem]
        && l[stem..] == *replacement.as_bytes()
}

impl Session {
    pub(super) fn new(set: &TrainingSet, config: &TrainConfig) -> Self {
        let mut tag_ids: HashMap<&str, TagId> = HashMap::new();
        let mut tag_names: Vec<Arc<str>> = Vec::new();
        let mut entries = Vec::with_capacity(set.len());
        for entry in set.entries() {
            let tag = *tag_ids.entry(entry.tag.as_str()).or_insert_with(|| {
                tag_names.push(Arc::from(entry.tag.as_str()));
                (tag_names.len() - 1) as TagId
            });
            let transform = Transform::between(&entry.form, &entry.lemma);
            let prefix_bytes = entry.form.len() - transform.source.len();
            entries.push(Ent {
                form: Arc::from(entry.form.as_str()),
                lemma: Arc::from(entry.lemma.as_str()),
                rev: entry.form.chars().rev().collect::<String>().into_boxed_str(),
                tag,
                boundaries: entry.part_boundaries.clone().into_boxed_slice(),
                prefix_bytes,
                min_suffix_cp: transform.source_len(),
                spec: -1,
                correct: transform.is_identity(),
            });
        }

        let mut order: Vec<u32> = (0..entries.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| {
            let (ea, eb) = (&entries[a as usize], &entries[b as usize]);
            ea.tag.cmp(&eb.tag).then_with(|| ea.rev.as_bytes().cmp(eb.rev.as_bytes()))
        });

        let error_count = entries.iter().filter(|e| !e.correct).count();
        let mut session = Session {
            min_support: config.min_support as u32,
            threading: config.threading,
            entries,
            order,
            tag_names,
            pool: StrPool::default(),
            cands: Vec::new(),
            by_suffix: HashMap::new(),
            sel: BTreeSet::new(),
            accepted: Vec::new(),
            error_count,
            error_curve: Vec::new(),
        };

        let mut fresh = Vec::new();
        for eid in 0..session.entries.len() {
            if !session.entries[eid].correct {
                session.add_generators(eid, &mut fresh);
            }
        }
        session.score_fresh(&fresh);
        session
    }

    /// Entry ids whose form ends with the suffix whose reversal is
    /// `rev_suffix` and whose tag is `tag`; one contiguous run of `order`.
    fn range<'a>(&'a self, tag: TagId, rev_suffix: &'a str) -> impl Iterator<Item = u32> + 'a {
        let probe = rev_suffix.as_bytes();
        let lo = self.order.partition_point(|&eid| {
            let e = &self.entries[eid as usize];
            (e.tag, e.rev.as_bytes()) < (tag, probe)
        });
        self.order[lo..].iter().copied().take_while(move |&eid| {
            let e = &self.entries[eid as usize];
            e.tag == tag && e.rev.as_bytes().starts_with(probe)
        })
    }

    /// Support and current gain of a candidate, from one range scan.
    fn scan_candidate(&self, cid: CandId) -> (u32, i64) {
        let c = &self.cands[cid as usize];
        let rev_suffix: String = c.suffix.chars().rev().collect();
        let (mut support, mut gain) = (0u32, 0i64);
        for eid in self.range(c.tag, &rev_suffix) {
            let e = &self.entries[eid as usize];
            let fixes = rewrite_hits(&c.source, &c.replacement, &e.form, &e.lemma);
            if fixes {
                support += 1;
            }
            gain += contrib(e.correct, e.spec, c.suffix_cp, fixes);
        }
        (support, gain)
    }

    fn key_of(&self, cid: CandId) -> SelKey {
        let c = &self.cands[cid as usize];
        SelKey {
            gain: c.gain,
            support: c.support,
            suffix_cp: c.suffix_cp,
            tag: self.tag_names[c.tag as usize].clone(),
            suffix: c.suffix.clone(),
            source: c.source.clone(),
            replacement: c.replacement.clone(),
            cand: cid,
        }
    }

    fn sel_remove(&mut self, cid: CandId) {
        if self.cands[cid as usize].in_sel {
            let key = self.key_of(cid);
            let removed = self.sel.remove(&key);
            debug_assert!(removed, "selection set out of sync");
            self.cands[cid as usize].in_sel = false;
        }
    }

    fn sel_insert_if_eligible(&mut self, cid: CandId) {
        let c = &self.cands[cid as usize];
        debug_assert!(!c.in_sel);
        if !c.dead && c.scored && c.support >= self.min_support && c.generators > 0 && c.gain > 0 {
            let key = self.key_of(cid);
            self.sel.insert(key);
            self.cands[cid as usize].in_sel = true;
        }
    }

    /// Finds the candidate (suffix, tag, transform), materializing it when
    /// unseen. New candidates land in `fresh` for scoring unless their key
    /// was already accepted.
    fn find_or_materialize(
        &mut self,
        suffix: &str,
        tag: TagId,
        source: &str,
        replacement: &str,
        fresh: &mut Vec<CandId>,
    ) -> CandId {
        let mut key_dead = false;
        if let Some(ids) = self.by_suffix.get(suffix).and_then(|per_tag| per_tag.get(&tag)) {
            for &cid in ids {
                let c = &self.cands[cid as usize];
                key_dead |= c.dead;
                if &*c.source == source && &*c.replacement == replacement {
                    return cid;
                }
            }
        }
        let suffix = self.pool.intern(suffix);
        let cid = self.cands.len() as CandId;
        self.cands.push(Cand {
            suffix: suffix.clone(),
            tag,
            source: self.pool.intern(source),
            replacement: self.pool.intern(replacement),
            suffix_cp: suffix.chars().count() as u32,
            support: 0,
            generators: 0,
            gain: 0,
            scored: false,
            dead: key_dead,
            in_sel: false,
        });
        self.by_suffix.entry(suffix).or_default().entry(tag).or_default().push(cid);
        if !key_dead {
            fresh.push(cid);
        }
        cid
    }

    fn score_fresh(&mut self, fresh: &[CandId]) {
        if fresh.is_empty() {
            return;
        }
        // Parallel scoring pays off only on the big initial batch.
        let mode = if fresh.len() >= 512 { self.threading } else { Threading::Sequential };
        let scores = {
            let this = &*self;
            par::map_slice(mode, fresh, |&cid| this.scan_candidate(cid))
        };
        for (&cid, (support, gain)) in fresh.iter().zip(scores) {
            let c = &mut self.cands[cid as usize];
            c.support = support;
            c.gain = gain;
            c.scored = true;
            self.sel_insert_if_eligible(cid);
        }
    }

    /// The candidate triples generated by entry `eid`, as
    /// (suffix, tag, source, replacement) slices of its own strings.
    fn generated_triples(&self, eid: usize) -> (Arc<str>, Arc<str>, TagId, usize, Vec<usize>) {
        let e = &self.entries[eid];
        let offsets = suffix_byte_starts(&e.form, &e.boundaries, e.min_suffix_cp);
        (e.form.clone(), e.lemma.clone(), e.tag, e.prefix_bytes, offsets)
    }

    /// Entry became wrong: count it as a generator of its candidates,
    /// materializing and scoring any it introduces.
    fn add_generators(&mut self, eid: usize, fresh: &mut Vec<CandId>) {
        let (form, lemma, tag, prefix, offsets) = self.generated_triples(eid);
        for off in offsets {
            let cid = self.find_or_materialize(&form[off..], tag, &form[prefix..], &lemma[prefix..], fresh);
            self.sel_remove(cid);
            self.cands[cid as usize].generators += 1;
            self.sel_insert_if_eligible(cid);
        }
    }

    /// Entry became correct: it no longer generates its candidates.
    fn remove_generators(&mut self, eid: usize) {
        let (form, lemma, tag, prefix, offsets) = self.generated_triples(eid);
        for off in offsets {
            let mut scratch = Vec::new();
            let cid = self.find_or_materialize(&form[off..], tag, &form[prefix..], &lemma[prefix..], &mut scratch);
            debug_assert!(scratch.is_empty(), "degenerating an unseen candidate");
            self.sel_remove(cid);
            let c = &mut self.cands[cid as usize];
            debug_assert!(c.generators > 0);
            c.generators -= 1;
            self.sel_insert_if_eligible(cid);
        }
    }

    /// Moves entry `eid` to the accepted rule described by (source,
    /// replacement, suffix length); updates every applicable candidate's
    /// gain and the generator counts. Returns the error-count delta.
    fn transition(
        &mut self,
        eid: usize,
        rule_source: &str,
        rule_replacement: &str,
        rule_cp: u32,
    ) -> i64 {
        let (old_correct, old_spec, new_correct) = {
            let e = &self.entries[eid];
            debug_assert!(e.spec < rule_cp as i32, "specificity must strictly increase");
            (e.correct, e.spec, rewrite_hits(rule_source, rule_replacement, &e.form, &e.lemma))
        };
        let new_spec = rule_cp as i32;

        let mut deltas: Vec<(CandId, i64)> = Vec::new();
        {
            let e = &self.entries[eid];
            let probes = e.form.char_indices().map(|(b, _)| b).chain(std::iter::once(e.form.len()));
            for off in probes {
                let Some(ids) = self.by_suffix.get(&e.form[off..]).and_then(|m| m.get(&e.tag))
                else {
                    continue;
                };
                for &cid in ids {
                    let c = &self.cands[cid as usize];
                    if c.dead {
                        continue;
                    }
                    // Every live candidate was scored when materialized;
                    // unsupported ones can never be selected, so their gains
                    // need no upkeep.
                    debug_assert!(c.scored);
                    if c.support < self.min_support {
                        continue;
                    }
                    let fixes = rewrite_hits(&c.source, &c.replacement, &e.form, &e.lemma);
                    let before = contrib(old_correct, old_spec, c.suffix_cp, fixes);
                    let after = contrib(new_correct, new_spec, c.suffix_cp, fixes);
                    if before != after {
                        deltas.push((cid, after - before));
                    }
                }
            }
        }
        {
            let e = &mut self.entries[eid];
            e.spec = new_spec;
            e.correct = new_correct;
        }
        for (cid, delta) in deltas {
            self.sel_remove(cid);
            self.cands[cid as usize].gain += delta;
            self.sel_insert_if_eligible(cid);
        }

        match (old_correct, new_correct) {
            (true, false) => {
                self.error_count += 1;
                let mut fresh = Vec::new();
                self.add_generators(eid, &mut fresh);
                self.score_fresh(&fresh);
                1
            }
            (false, true) => {
                self.error_count -= 1;
                self.remove_generators(eid);
                -1
            }
            _ => 0,
        }
    }

    fn accept(&mut self, winner: CandId) {
        let (suffix, tag, source, replacement, suffix_cp, expected_gain) = {
            let c = &self.cands[winner as usize];
            (c.suffix.clone(), c.tag, c.source.clone(), c.replacement.clone(), c.suffix_cp, c.gain)
        };
        debug_assert!(expected_gain > 0);
        debug_assert!(self.cands[winner as usize].support >= self.min_support);

        // The key is spent: no other transform may ever be accepted for it.
        let siblings = self.by_suffix[&suffix][&tag].clone();
        for cid in siblings {
            self.sel_remove(cid);
            self.cands[cid as usize].dead = true;
        }

        let rev_suffix: String = suffix.chars().rev().collect();
        let affected: Vec<u32> = self
            .range(tag, &rev_suffix)
            .filter(|&eid| self.entries[eid as usize].spec < suffix_cp as i32)
            .collect();
        let mut error_delta = 0i64;
        for eid in affected {
            error_delta += self.transition(eid as usize, &source, &replacement, suffix_cp);
        }
        debug_assert_eq!(
            -error_delta, expected_gain,
            "accepted rule's gain must equal the realized error reduction"
        );

        self.accepted.push(winner);
        self.error_curve.push(self.error_count);
    }

    pub(super) fn run(&mut self, max_iterations: Option<usize>) -> Result<(), TrainError> {
        self.error_curve.push(self.error_count);
        while let Some(top) = self.sel.last() {
            let winner = top.cand;
            if let Some(limit) = max_iterations {
                if self.accepted.len() >= limit {
                    return Err(TrainError::IterationLimit {
                        limit,
                        remaining_errors: self.error_count,
                    });
                }
            }
            self.accept(winner);
        }
        Ok(())
    }

    pub(super) fn into_parts(self) -> (Vec<Rule>, ExceptionTable, Vec<usize>) {
        let rules = self
            .accepted
            .iter()
            .map(|&cid| {
                let c = &self.cands[cid as usize];
                Rule::new(
                    &*c.suffix,
                    &*self.tag_names[c.tag as usize],
                    Transform::new(&*c.source, &*c.replacement),
                )
                .expect("accepted candidates are well-formed rules")
            })
            .collect();
        let mut exceptions = ExceptionTable::new();
        for e in &self.entries {
            if !e.correct {
                exceptions
                    .insert(
                        e.form.to_string(),
                        self.tag_names[e.tag as usize].to_string(),
                        e.lemma.to_string(),
                    )
                    .expect("training entries are unique per (form, tag)");
            }
        }
        (rules, exceptions, self.error_curve)
    }

    #[cfg(test)]
    fn candidate_state(&self, suffix: &str, tag: &str, source: &str, replacement: &str) -> Option<(u32, i64, u32)> {
        let tag = self.tag_names.iter().position(|t| &**t == tag)? as TagId;
        let ids = self.by_suffix.get(suffix)?.get(&tag)?;
        ids.iter().copied().find_map(|cid| {
            let c = &self.cands[cid as usize];
            (&*c.source == source && &*c.replacement == replacement)
                .then_some((c.support, c.gain, c.generators))
        })
    }
}
