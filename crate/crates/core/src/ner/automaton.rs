//! Aho–Corasick automaton over `char` sequences.

use std::collections::VecDeque;

const ROOT: u32 = 0;

#[derive(Debug, Clone, Default)]
struct State {
    /// Sorted by char for binary search.
    goto: Vec<(char, u32)>,
    fail: u32,
    /// Pattern ending exactly at this state.
    output: Option<u32>,
    /// Nearest state on the failure chain with an output.
    dict_link: Option<u32>,
    depth: u32,
}

impl State {
    fn next(&self, c: char) -> Option<u32> {
        self.goto
            .binary_search_by_key(&c, |&(k, _)| k)
            .ok()
            .map(|i| self.goto[i].1)
    }
}

/// Immutable multi-pattern automaton. Construction is linear in the total
/// pattern length (times the log of the alphabet fan-out per state).
#[derive(Debug, Clone)]
pub struct Automaton {
    states: Vec<State>,
    pattern_lens: Vec<usize>,
}

/// One occurrence: pattern index and char span in the haystack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hit {
    pub pattern: u32,
    pub start: usize,
    pub end: usize,
}

impl Automaton {
    /// Patterns are matched as given; callers fold case beforehand. Empty
    /// patterns are ignored. When two patterns are identical the first wins.
    pub fn new<I, P>(patterns: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: AsRef<[char]>,
    {
        let mut states = vec![State::default()];
        let mut pattern_lens = Vec::new();
        for (idx, pattern) in patterns.into_iter().enumerate() {
            let pattern = pattern.as_ref();
            pattern_lens.push(pattern.len());
            if pattern.is_empty() {
                continue;
            }
            let mut cur = ROOT;
            for &c in pattern {
                cur = match states[cur as usize].next(c) {
                    Some(s) => s,
                    None => {
                        let id = states.len() as u32;
                        let depth = states[cur as usize].depth + 1;
                        states.push(State {
                            depth,
                            ..State::default()
                        });
                        let goto = &mut states[cur as usize].goto;
                        let pos = goto.partition_point(|&(k, _)| k < c);
                        goto.insert(pos, (c, id));
                        id
                    }
                };
            }
            let out = &mut states[cur as usize].output;
            if out.is_none() {
                *out = Some(idx as u32);
            }
        }

        // Breadth-first failure links.
        let mut queue = VecDeque::new();
        for &(_, s) in &states[ROOT as usize].goto {
            queue.push_back(s);
        }
        while let Some(s) = queue.pop_front() {
            let children = states[s as usize].goto.clone();
            for (c, child) in children {
                let mut f = states[s as usize].fail;
                let fail = loop {
                    if let Some(t) = states[f as usize].next(c) {
                        if t != child {
                            break t;
                        }
                    }
                    if f == ROOT {
                        break ROOT;
                    }
                    f = states[f as usize].fail;
                };
                states[child as usize].fail = fail;
                states[child as usize].dict_link = if states[fail as usize].output.is_some() {
                    Some(fail)
                } else {
                    states[fail as usize].dict_link
                };
                queue.push_back(child);
            }
        }
        Automaton { states, pattern_lens }
    }

    pub fn pattern_count(&self) -> usize {
        self.pattern_lens.len()
    }

    fn step(&self, mut s: u32, c: char) -> u32 {
        loop {
            if let Some(t) = self.states[s as usize].next(c) {
                return t;
            }
            if s == ROOT {
                return ROOT;
            }
            s = self.states[s as usize].fail;
        }
    }

    /// Every occurrence of every pattern, overlapping ones included, ordered
    /// by end position and then by decreasing length.
    pub fn find_overlapping(&self, haystack: &[char]) -> Vec<Hit> {
        let mut hits = Vec::new();
        let mut s = ROOT;
        for (i, &c) in haystack.iter().enumerate() {
            s = self.step(s, c);
            let mut out = if self.states[s as usize].output.is_some() {
                Some(s)
            } else {
                self.states[s as usize].dict_link
            };
            while let Some(o) = out {
                let state = &self.states[o as usize];
                let pattern = state.output.expect("dict links point at outputs");
                let len = state.depth as usize;
                hits.push(Hit {
                    pattern,
                    start: i + 1 - len,
                    end: i + 1,
                });
                out = state.dict_link;
            }
        }
        hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn brute(patterns: &[&str], hay: &str) -> Vec<(usize, usize)> {
        let h = chars(hay);
        let mut out = Vec::new();
        for p in patterns {
            let p = chars(p);
            if p.is_empty() || p.len() > h.len() {
                continue;
            }
            for s in 0..=h.len() - p.len() {
                if h[s..s + p.len()] == p[..] {
                    out.push((s, s + p.len()));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    #[test]
    fn classic_example() {
        let pats = ["he", "she", "his", "hers"];
        let a = Automaton::new(pats.iter().map(|p| chars(p)));
        let mut got: Vec<_> = a
            .find_overlapping(&chars("ushers"))
            .iter()
            .map(|h| (h.start, h.end))
            .collect();
        got.sort();
        assert_eq!(got, brute(&pats, "ushers"));
        assert_eq!(got, [(1, 4), (2, 4), (2, 6)]);
    }

    #[test]
    fn unicode_patterns() {
        let pats = ["α-l", "l-rha", "rhamno"];
        let a = Automaton::new(pats.iter().map(|p| chars(p)));
        let hay = "1-o-α-l-rhamnopyranoside";
        let mut got: Vec<_> = a
            .find_overlapping(&chars(hay))
            .iter()
            .map(|h| (h.start, h.end))
            .collect();
        got.sort();
        assert_eq!(got, brute(&pats, hay));
    }

    #[test]
    fn duplicate_patterns_report_first() {
        let a = Automaton::new([chars("ab"), chars("ab")]);
        let hits = a.find_overlapping(&chars("xab"));
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].pattern, 0);
    }

    proptest::proptest! {
        #[test]
        fn agrees_with_brute_force(
            pats in proptest::collection::vec("[ab ]{1,4}", 1..6),
            hay in "[abc ]{0,30}",
        ) {
            let refs: Vec<&str> = pats.iter().map(|s| s.as_str()).collect();
            let a = Automaton::new(refs.iter().map(|p| chars(p)));
            let mut got: Vec<_> = a.find_overlapping(&chars(&hay)).iter().map(|h| (h.start, h.end)).collect();
            got.sort();
            got.dedup();
            proptest::prop_assert_eq!(got, brute(&refs, &hay));
        }
    }
}
