use std::collections::BTreeMap;
use std::time::Instant;

use crate::relations::{Elem, Relation};

/// Limits for a single automorphism search.
#[derive(Debug, Clone, Copy, Default)]
pub struct SearchBudget {
    pub max_nodes: Option<u64>,
    pub deadline: Option<Instant>,
}

impl SearchBudget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn nodes(max_nodes: u64) -> Self {
        Self {
            max_nodes: Some(max_nodes),
            deadline: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AutomorphismSearch {
    /// `perm[x]` is the image of the encoded element `x`.
    Found(Vec<u64>),
    None,
    Exhausted,
}

impl AutomorphismSearch {
    pub fn permutation(&self) -> Option<&[u64]> {
        match self {
            AutomorphismSearch::Found(p) => Some(p),
            _ => None,
        }
    }
}

/// The power structure `(D^k, {H^k})` prepared for repeated searches.
///
/// Elements are encoded base `q`, first coordinate most significant. Each
/// element carries an invariant class: the vector of its occurrence counts
/// per (relation, position) in `H^k`, which any automorphism preserves.
pub struct PowerLanguage<'a> {
    q: u32,
    k: usize,
    size: usize,
    relations: Vec<&'a Relation>,
    /// `by_value[r][p][v]`: tuples of relation `r` with value `v` at `p`.
    by_value: Vec<Vec<Vec<Vec<&'a [Elem]>>>>,
    class: Vec<u32>,
}

impl<'a> PowerLanguage<'a> {
    pub fn new(q: u32, k: usize, relations: Vec<&'a Relation>) -> Self {
        assert!(k >= 1);
        let size = (q as usize).pow(k as u32);
        let by_value: Vec<Vec<Vec<Vec<&[Elem]>>>> = relations
            .iter()
            .map(|r| {
                (0..r.arity())
                    .map(|p| {
                        (0..q)
                            .map(|v| r.iter().filter(|t| t[p] == v).map(Vec::as_slice).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut lang = Self {
            q,
            k,
            size,
            relations,
            by_value,
            class: Vec::new(),
        };
        let mut ids: BTreeMap<Vec<u128>, u32> = BTreeMap::new();
        let mut class = Vec::with_capacity(size);
        for x in 0..size as u64 {
            let v = lang.invariant(x);
            let next = ids.len() as u32;
            class.push(*ids.entry(v).or_insert(next));
        }
        lang.class = class;
        lang
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn encode(&self, coords: &[Elem]) -> u64 {
        assert_eq!(coords.len(), self.k);
        coords
            .iter()
            .fold(0u64, |acc, &c| acc * self.q as u64 + c as u64)
    }

    pub fn coord(&self, x: u64, c: usize) -> Elem {
        let shift = (self.k - 1 - c) as u32;
        ((x / (self.q as u64).pow(shift)) % self.q as u64) as Elem
    }

    fn invariant(&self, x: u64) -> Vec<u128> {
        let mut out = Vec::new();
        for per_pos in &self.by_value {
            for per_val in per_pos {
                // Wrapping keeps this a function of the true count.
                let n = (0..self.k).fold(1u128, |acc, c| {
                    acc.wrapping_mul(per_val[self.coord(x, c) as usize].len() as u128)
                });
                out.push(n);
            }
        }
        out
    }

    /// Componentwise membership in `H^k`.
    pub fn contains(&self, r: usize, tuple: &[u64]) -> bool {
        let rel = self.relations[r];
        let mut slice = vec![0; tuple.len()];
        (0..self.k).all(|c| {
            for (s, &x) in slice.iter_mut().zip(tuple) {
                *s = self.coord(x, c);
            }
            rel.contains(&slice)
        })
    }

    /// Calls `visit` on every tuple of `H^k` with `x` at `position`, stopping
    /// early when it returns `false`. Returns whether it ran to completion.
    fn through(
        &self,
        r: usize,
        position: usize,
        x: u64,
        mut visit: impl FnMut(&[u64]) -> bool,
    ) -> bool {
        let arity = self.relations[r].arity();
        let choices: Vec<&Vec<&[Elem]>> = (0..self.k)
            .map(|c| &self.by_value[r][position][self.coord(x, c) as usize])
            .collect();
        if choices.iter().any(|c| c.is_empty()) {
            return true;
        }
        let mut cursor = vec![0usize; self.k];
        let mut tuple = vec![0u64; arity];
        loop {
            tuple.iter_mut().for_each(|e| *e = 0);
            for (c, &pick) in cursor.iter().enumerate() {
                for (e, &v) in tuple.iter_mut().zip(choices[c][pick]) {
                    *e = *e * self.q as u64 + v as u64;
                }
            }
            if !visit(&tuple) {
                return false;
            }
            let mut c = self.k;
            loop {
                if c == 0 {
                    return true;
                }
                c -= 1;
                cursor[c] += 1;
                if cursor[c] < choices[c].len() {
                    break;
                }
                cursor[c] = 0;
            }
        }
    }

    /// Whether `perm` is a bijection mapping every tuple of every `H^k`
    /// into `H^k`. Enumerates `H^k` lazily.
    pub fn is_automorphism(&self, perm: &[u64]) -> bool {
        if perm.len() != self.size {
            return false;
        }
        let mut seen = vec![false; self.size];
        for &y in perm {
            if y as usize >= self.size || std::mem::replace(&mut seen[y as usize], true) {
                return false;
            }
        }
        (0..self.relations.len()).all(|r| {
            if self.relations[r].arity() == 0 {
                return true;
            }
            // Every tuple passes through some value at position 0.
            (0..self.size as u64).all(|x| {
                self.through(r, 0, x, |t| {
                    let image: Vec<u64> = t.iter().map(|&e| perm[e as usize]).collect();
                    self.contains(r, &image)
                })
            })
        })
    }

    /// Searches for an automorphism of the power structure meeting every
    /// required point map in `fixes`.
    pub fn find(&self, fixes: &[(u64, u64)], budget: SearchBudget) -> AutomorphismSearch {
        let mut search = Search::new(self, budget);
        for &(x, y) in fixes {
            let (x, y) = (x as usize, y as usize);
            if x >= self.size || y >= self.size {
                return AutomorphismSearch::None;
            }
            if let Some(prev) = search.image[x] {
                if prev != y {
                    return AutomorphismSearch::None;
                }
                continue;
            }
            if !search.allowed(x, y) || !search.assign(x, y) {
                return AutomorphismSearch::None;
            }
        }
        match search.run() {
            Ok(true) => AutomorphismSearch::Found(
                search
                    .image
                    .iter()
                    .map(|y| y.expect("complete") as u64)
                    .collect(),
            ),
            Ok(false) => AutomorphismSearch::None,
            Err(Exhausted) => AutomorphismSearch::Exhausted,
        }
    }
}

struct Exhausted;

/// Backtracking state: candidate bitsets per element, restored from a trail.
struct Search<'l, 'a> {
    lang: &'l PowerLanguage<'a>,
    words: usize,
    domains: Vec<u64>,
    trail: Vec<(usize, Vec<u64>)>,
    image: Vec<Option<usize>>,
    used: Vec<u64>,
    budget: SearchBudget,
    nodes: u64,
}

impl<'l, 'a> Search<'l, 'a> {
    fn new(lang: &'l PowerLanguage<'a>, budget: SearchBudget) -> Self {
        let n = lang.size;
        let words = n.div_ceil(64);
        let mut domains = vec![0u64; n * words];
        for x in 0..n {
            for y in 0..n {
                if lang.class[x] == lang.class[y] {
                    domains[x * words + y / 64] |= 1 << (y % 64);
                }
            }
        }
        Self {
            lang,
            words,
            domains,
            trail: Vec::new(),
            image: vec![None; n],
            used: vec![0; words],
            budget,
            nodes: 0,
        }
    }

    fn domain(&self, x: usize) -> &[u64] {
        &self.domains[x * self.words..(x + 1) * self.words]
    }

    fn allowed(&self, x: usize, y: usize) -> bool {
        self.domain(x)[y / 64] >> (y % 64) & 1 == 1 && self.used[y / 64] >> (y % 64) & 1 == 0
    }

    fn free_candidates(&self, x: usize) -> u32 {
        self.domain(x)
            .iter()
            .zip(&self.used)
            .map(|(d, u)| (d & !u).count_ones())
            .sum()
    }

    fn candidates(&self, x: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, (d, u)) in self.domain(x).iter().zip(&self.used).enumerate() {
            let mut bits = d & !u;
            while bits != 0 {
                out.push(w * 64 + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        // Trying the fixed point first finds near-identity maps quickly.
        if let Some(pos) = out.iter().position(|&y| y == x) {
            out.remove(pos);
            out.insert(0, x);
        }
        out
    }

    fn restrict(&mut self, x: usize, keep: impl Fn(usize) -> bool) -> bool {
        let range = x * self.words..(x + 1) * self.words;
        let old: Vec<u64> = self.domains[range.clone()].to_vec();
        let mut changed = false;
        for (w, word) in self.domains[range].iter_mut().enumerate() {
            let mut bits = *word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                if !keep(w * 64 + b) {
                    *word &= !(1 << b);
                    changed = true;
                }
            }
        }
        if changed {
            self.trail.push((x, old));
        }
        self.free_candidates(x) > 0
    }

    /// Sets `π(x) = y` and forward-checks every tuple through `x`.
    fn assign(&mut self, x: usize, y: usize) -> bool {
        self.image[x] = Some(y);
        self.used[y / 64] |= 1 << (y % 64);
        let lang = self.lang;
        for r in 0..lang.relations.len() {
            for p in 0..lang.relations[r].arity() {
                let mut pending: Vec<(usize, Vec<u64>)> = Vec::new();
                let mut ok = true;
                lang.through(r, p, x as u64, |t| {
                    let mut open: Option<usize> = None;
                    for &e in t {
                        let e = e as usize;
                        if self.image[e].is_none() {
                            match open {
                                None => open = Some(e),
                                Some(o) if o == e => {}
                                Some(_) => return true,
                            }
                        }
                    }
                    match open {
                        None => {
                            let image: Vec<u64> = t
                                .iter()
                                .map(|&e| self.image[e as usize].unwrap() as u64)
                                .collect();
                            ok = lang.contains(r, &image);
                            ok
                        }
                        Some(z) => {
                            pending.push((z, t.to_vec()));
                            true
                        }
                    }
                });
                if !ok {
                    return false;
                }
                for (z, t) in pending {
                    if self.image[z].is_some() {
                        continue;
                    }
                    let allowed = self.allowed_values(r, &t, z);
                    if !self.restrict(z, |cand| {
                        (0..lang.k).all(|c| allowed[c][lang.coord(cand as u64, c) as usize])
                    }) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Per coordinate, the values the image of `z` may take so that the
    /// image of `t` stays in `H^k`.
    fn allowed_values(&self, r: usize, t: &[u64], z: usize) -> Vec<Vec<bool>> {
        let lang = self.lang;
        let rel = lang.relations[r];
        (0..lang.k)
            .map(|c| {
                let mut slice: Vec<Option<Elem>> = t
                    .iter()
                    .map(|&e| self.image[e as usize].map(|y| lang.coord(y as u64, c)))
                    .collect();
                let mut ok = vec![false; lang.q as usize];
                for v in 0..lang.q {
                    for (s, &e) in slice.iter_mut().zip(t) {
                        if e as usize == z {
                            *s = Some(v);
                        }
                    }
                    let full: Vec<Elem> =
                        slice.iter().map(|s| s.expect("only z was open")).collect();
                    ok[v as usize] = rel.contains(&full);
                }
                ok
            })
            .collect()
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (x, old) = self.trail.pop().expect("non-empty");
            self.domains[x * self.words..(x + 1) * self.words].copy_from_slice(&old);
        }
    }

    fn unassign(&mut self, x: usize, y: usize) {
        self.image[x] = None;
        self.used[y / 64] &= !(1 << (y % 64));
    }

    fn tick(&mut self) -> Result<(), Exhausted> {
        self.nodes += 1;
        if self.budget.max_nodes.is_some_and(|m| self.nodes > m) {
            return Err(Exhausted);
        }
        if self.nodes.is_multiple_of(256)
            && self.budget.deadline.is_some_and(|d| Instant::now() >= d)
        {
            return Err(Exhausted);
        }
        Ok(())
    }

    fn run(&mut self) -> Result<bool, Exhausted> {
        self.tick()?;
        // Most constrained unassigned element; lowest index on ties.
        let mut best: Option<(u32, usize)> = None;
        for x in 0..self.lang.size {
            if self.image[x].is_some() {
                continue;
            }
            let n = self.free_candidates(x);
            if best.is_none_or(|(m, _)| n < m) {
                best = Some((n, x));
                if n <= 1 {
                    break;
                }
            }
        }
        let Some((n, x)) = best else {
            return Ok(true);
        };
        if n == 0 {
            return Ok(false);
        }
        for y in self.candidates(x) {
            let mark = self.trail.len();
            if self.assign(x, y) && self.run()? {
                return Ok(true);
            }
            self.undo(mark);
            self.unassign(x, y);
        }
        Ok(false)
    }
}
