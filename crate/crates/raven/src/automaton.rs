//! Self-matching statistics via an online suffix automaton.
//!
//! For a stream `s`, `self_matching_stats(s)[u]` is the length of the longest
//! suffix of `s[..=u]` that also occurs as a substring of `s[..u]` — i.e.
//! that has an occurrence starting strictly before the suffix's own start.
//! This is exactly the "duplicated from the context" length used by the
//! n-gram analyses: an earlier-start occurrence of length L necessarily ends
//! before position u, and vice versa.

use std::collections::HashMap;

use crate::corpus::TokenId;

const NONE: u32 = u32::MAX;

struct State {
    max_len: u32,
    link: u32,
    trans: HashMap<TokenId, u32>,
}

struct SuffixAutomaton {
    states: Vec<State>,
    last: u32,
}

impl SuffixAutomaton {
    fn new() -> Self {
        Self {
            states: vec![State {
                max_len: 0,
                link: NONE,
                trans: HashMap::new(),
            }],
            last: 0,
        }
    }

    fn max_len(&self, v: u32) -> u32 {
        self.states[v as usize].max_len
    }

    fn link(&self, v: u32) -> u32 {
        self.states[v as usize].link
    }

    fn next(&self, v: u32, c: TokenId) -> Option<u32> {
        self.states[v as usize].trans.get(&c).copied()
    }

    fn extend(&mut self, c: TokenId) {
        let cur = self.states.len() as u32;
        let cur_len = self.max_len(self.last) + 1;
        self.states.push(State {
            max_len: cur_len,
            link: NONE,
            trans: HashMap::new(),
        });

        let mut p = self.last;
        while p != NONE && !self.states[p as usize].trans.contains_key(&c) {
            self.states[p as usize].trans.insert(c, cur);
            p = self.link(p);
        }
        if p == NONE {
            self.states[cur as usize].link = 0;
        } else {
            let q = self.next(p, c).unwrap();
            if self.max_len(p) + 1 == self.max_len(q) {
                self.states[cur as usize].link = q;
            } else {
                let clone = self.states.len() as u32;
                let clone_state = State {
                    max_len: self.max_len(p) + 1,
                    link: self.link(q),
                    trans: self.states[q as usize].trans.clone(),
                };
                self.states.push(clone_state);
                let mut p = p;
                while p != NONE && self.next(p, c) == Some(q) {
                    self.states[p as usize].trans.insert(c, clone);
                    p = self.link(p);
                }
                self.states[q as usize].link = clone;
                self.states[cur as usize].link = clone;
            }
        }
        self.last = cur;
    }
}

/// Matching statistics of `stream` against its own strict prefixes.
/// `out[0]` is always 0.
pub fn self_matching_stats(stream: &[TokenId]) -> Vec<usize> {
    let mut sam = SuffixAutomaton::new();
    let mut out = Vec::with_capacity(stream.len());
    // (state, len): canonical state of the current longest match, valid for
    // the automaton over the prefix consumed so far.
    let mut state = 0u32;
    let mut len = 0u32;

    for &c in stream {
        // Match step against the automaton of the strict prefix. Only the
        // length survives; the state pointer is re-derived below.
        let mut cursor = state;
        loop {
            if sam.next(cursor, c).is_some() {
                len += 1;
                break;
            }
            if cursor == 0 {
                len = 0;
                break;
            }
            cursor = sam.link(cursor);
            len = sam.max_len(cursor);
        }
        out.push(len as usize);

        // Grow the automaton, then re-canonicalize (state, len) from the full
        // prefix state: the match is a suffix of the consumed prefix, so it
        // lies on the suffix-link path of `last`. This keeps the pointer
        // valid across clone operations.
        sam.extend(c);
        if len == 0 {
            state = 0;
        } else {
            state = sam.last;
            while sam.link(state) != NONE && sam.max_len(sam.link(state)) >= len {
                state = sam.link(state);
            }
        }
    }
    out
}
