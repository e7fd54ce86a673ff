//! Exact finite operator realization on Fun(A, C).
//!
//! Translation and phase-multiplication operators are monomial: a permutation
//! of A together with a root-of-unity exponent at each point. Products and
//! commutators stay inside the monomial group and cost O(|A|), so realized
//! structure is never approximated. The phase-level closure tracks formal
//! (translation, phase) words with the twisted composition law; comparing the
//! two closures is what exposes analytically invisible structure.

use crate::error::{Error, Result};
use crate::phase::{PhaseData, QuadraticPhase};
use sha2::{Digest, Sha256};
use std::collections::HashMap;

/// A monomial (signed-permutation) operator on Fun(A, C):
/// `(X f)(x) = zeta_p^diag[x] f(perm[x])`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MonomialOperator {
    p: u8,
    perm: Vec<u32>,
    diag: Vec<u8>,
}

impl MonomialOperator {
    pub fn identity(size: u32, p: u8) -> Self {
        Self {
            p,
            perm: (0..size).collect(),
            diag: vec![0; size as usize],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.diag.iter().all(|&d| d == 0)
            && self.perm.iter().enumerate().all(|(i, &x)| x == i as u32)
    }

    pub fn perm(&self) -> &[u32] {
        &self.perm
    }

    pub fn diag(&self) -> &[u8] {
        &self.diag
    }

    /// self after other, as function actions: (self.compose(other))(f) = self(other(f)).
    pub fn compose(&self, other: &MonomialOperator) -> MonomialOperator {
        let size = self.perm.len();
        let mut perm = vec![0u32; size];
        let mut diag = vec![0u8; size];
        for x in 0..size {
            let mid = self.perm[x] as usize;
            perm[x] = other.perm[mid];
            diag[x] = (self.diag[x] + other.diag[mid]) % self.p;
        }
        MonomialOperator {
            p: self.p,
            perm,
            diag,
        }
    }

    pub fn inverse(&self) -> MonomialOperator {
        let size = self.perm.len();
        let mut perm = vec![0u32; size];
        for (x, &y) in self.perm.iter().enumerate() {
            perm[y as usize] = x as u32;
        }
        let diag = (0..size)
            .map(|y| {
                let x = perm[y] as usize;
                (self.p - self.diag[x]) % self.p
            })
            .collect();
        MonomialOperator {
            p: self.p,
            perm,
            diag,
        }
    }

    /// Group commutator X Y X^-1 Y^-1.
    pub fn commutator(&self, other: &MonomialOperator) -> MonomialOperator {
        self.compose(other)
            .compose(&self.inverse())
            .compose(&other.inverse())
    }

    /// Multiplicative order.
    pub fn order(&self) -> u64 {
        let mut acc = self.clone();
        let mut n = 1u64;
        while !acc.is_identity() {
            acc = acc.compose(self);
            n += 1;
        }
        n
    }

    fn key(&self) -> Vec<u8> {
        let mut k = Vec::with_capacity(self.perm.len() * 5);
        for (&p, &d) in self.perm.iter().zip(self.diag.iter()) {
            k.extend_from_slice(&p.to_le_bytes());
            k.push(d);
        }
        k
    }
}

/// Realizes a generator (a, phi) as T_a . M_phi: the permutation part is
/// x -> x + a and the diagonal exponent at x is chi(phi(x + a)).
pub fn realize(data: &PhaseData, translation: u32, phase: &QuadraticPhase) -> MonomialOperator {
    let space = data.space();
    let chi = data.character(phase.block());
    let size = space.size();
    let mut perm = Vec::with_capacity(size as usize);
    let mut diag = Vec::with_capacity(size as usize);
    for x in space.codes() {
        let shifted = space.add_codes(x, translation);
        perm.push(shifted);
        diag.push(chi.eval(phase.value(shifted)));
    }
    MonomialOperator {
        p: space.p(),
        perm,
        diag,
    }
}

/// A formal word in the phase calculus: a translation code and one phase
/// part per block, composed by the twist (a, phi) o (b, psi) =
/// (a + b, phi(. - b) + psi). Unlike its operator realization, the word
/// remembers exact ring values, including the analytically invisible ones.
#[derive(Clone, PartialEq, Debug)]
pub struct PhaseWord {
    pub translation: u32,
    pub parts: Vec<QuadraticPhase>,
}

impl PhaseWord {
    pub fn identity(data: &PhaseData) -> Self {
        let parts = (0..data.space().blocks().len())
            .map(|b| QuadraticPhase::zero(data.space(), b))
            .collect();
        Self {
            translation: 0,
            parts,
        }
    }

    pub fn from_generator(data: &PhaseData, gen_index: usize) -> Self {
        let g = &data.generators()[gen_index];
        let mut w = Self::identity(data);
        w.translation = data.space().encode(&g.translation);
        let b = g.phase.block();
        w.parts[b] = g.phase.clone();
        w
    }

    pub fn compose(&self, other: &PhaseWord, data: &PhaseData) -> PhaseWord {
        let space = data.space();
        let translation = space.add_codes(self.translation, other.translation);
        let neg_b = space.neg_code(other.translation);
        let parts = self
            .parts
            .iter()
            .zip(other.parts.iter())
            .map(|(phi, psi)| phi.translate(neg_b).add(psi).expect("same block"))
            .collect();
        PhaseWord { translation, parts }
    }

    pub fn inverse(&self, data: &PhaseData) -> PhaseWord {
        // (a, phi)^-1 = (-a, -phi(. + a))
        let space = data.space();
        let translation = space.neg_code(self.translation);
        let parts = self
            .parts
            .iter()
            .map(|phi| {
                let shifted = phi.translate(self.translation);
                QuadraticPhase::from_table_unchecked(
                    space,
                    phi.block(),
                    shifted.values().iter().map(|v| v.neg()).collect(),
                )
                .expect("same shape")
            })
            .collect();
        PhaseWord { translation, parts }
    }

    pub fn commutator(&self, other: &PhaseWord, data: &PhaseData) -> PhaseWord {
        self.compose(other, data)
            .compose(&self.inverse(data), data)
            .compose(&other.inverse(data), data)
    }

    pub fn is_identity(&self) -> bool {
        self.translation == 0 && self.parts.iter().all(QuadraticPhase::is_zero)
    }

    pub fn realize(&self, data: &PhaseData) -> MonomialOperator {
        let size = data.space().size();
        let mut op = MonomialOperator::identity(size, data.space().p());
        // T_a first, then the product of per-block multipliers
        let space = data.space();
        for x in space.codes() {
            op.perm[x as usize] = space.add_codes(x, self.translation);
        }
        for (b, phi) in self.parts.iter().enumerate() {
            let chi = data.character(b);
            for x in space.codes() {
                let shifted = op.perm[x as usize];
                op.diag[x as usize] =
                    (op.diag[x as usize] + chi.eval(phi.value(shifted))) % space.p();
            }
        }
        op
    }

    fn key(&self) -> Vec<u32> {
        let mut k = vec![self.translation];
        for part in &self.parts {
            k.extend(part.values().iter().map(|v| v.code()));
        }
        k
    }
}

/// Result of the bounded phase-level closure: layer 0 holds the generators,
/// layer t the words first produced by products and commutators of earlier
/// layers. `stabilized` is the index of the last productive layer; `None`
/// means the cap or depth limit cut the computation short.
pub struct Closure {
    pub layers: Vec<Vec<PhaseWord>>,
    pub stabilized: Option<usize>,
    pub truncated: bool,
}

impl Closure {
    pub fn elements(&self) -> impl Iterator<Item = &PhaseWord> {
        self.layers.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Bounded closure of the formal phase words under products and commutators.
pub fn generated_closure(
    data: &PhaseData,
    depth_limit: usize,
    element_cap: usize,
) -> Result<Closure> {
    let d = data.defect_rank();
    let m_max = data
        .space()
        .blocks()
        .iter()
        .map(|b| b.ring.m() as usize)
        .max()
        .unwrap_or(0);
    if depth_limit > m_max + d + 1 {
        return Err(Error::InvalidConfig {
            field: "options.depth_limit".into(),
            message: format!(
                "depth limit {depth_limit} exceeds termination bound m + d + 1 = {}",
                m_max + d + 1
            ),
        });
    }

    let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut layers: Vec<Vec<PhaseWord>> = Vec::new();

    let layer0: Vec<PhaseWord> = if data.generators().is_empty() {
        vec![PhaseWord::identity(data)]
    } else {
        (0..data.generators().len())
            .map(|i| PhaseWord::from_generator(data, i))
            .collect()
    };
    let mut all: Vec<PhaseWord> = Vec::new();
    let mut first = Vec::new();
    for w in layer0 {
        if seen.insert(w.key(), all.len()).is_none() {
            all.push(w.clone());
            first.push(w);
        }
    }
    layers.push(first);

    let mut truncated = false;
    let mut stabilized = Some(0);
    let mut composition_budget = element_cap.saturating_mul(64);
    for depth in 1..=depth_limit {
        let prev_start = all.len() - layers.last().unwrap().len();
        let mut fresh = Vec::new();
        'outer: for i in 0..all.len() {
            for j in 0..all.len() {
                // at least one factor from the newest layer
                if i < prev_start && j < prev_start {
                    continue;
                }
                if composition_budget < 2 {
                    truncated = true;
                    break 'outer;
                }
                composition_budget -= 2;
                let prods = [
                    all[i].compose(&all[j], data),
                    all[i].commutator(&all[j], data),
                ];
                for w in prods {
                    if all.len() + fresh.len() >= element_cap {
                        truncated = true;
                        break 'outer;
                    }
                    if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(w.key()) {
                        e.insert(all.len() + fresh.len());
                        fresh.push(w);
                    }
                }
            }
        }
        if fresh.is_empty() {
            stabilized = Some(depth - 1);
            break;
        }
        all.extend(fresh.iter().cloned());
        layers.push(fresh);
        // a nonempty final layer leaves stabilization unconfirmed
        stabilized = None;
        if truncated {
            break;
        }
    }

    Ok(Closure {
        layers,
        stabilized,
        truncated,
    })
}

/// Canonical fingerprint of the generated operator structure. Equal for
/// relabeling-equivalent phase data: the multiplication table is rebuilt for
/// every generator ordering and the lexicographically least serialization is
/// hashed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InteractionSignature {
    pub fingerprint: String,
    /// Multiset of (element order, minimal word length).
    pub order_profile: Vec<(u64, usize)>,
    /// Number of distinct operators generated.
    pub size: usize,
}

impl InteractionSignature {
    /// Signature of the empty (trivial) operator family.
    pub fn trivial() -> Self {
        let hash = Sha256::digest(b"trivial");
        Self {
            fingerprint: hex_prefix(&hash),
            order_profile: vec![(1, 0)],
            size: 1,
        }
    }
}

fn hex_prefix(bytes: &[u8]) -> String {
    bytes[..16].iter().map(|b| format!("{b:02x}")).collect()
}

const SIGNATURE_PERM_BUDGET: usize = 50_000_000;

/// Cayley-graph data of the realized generators: element list in BFS word
/// order plus the full product table element x generator -> element.
struct CayleyTable {
    products: Vec<Vec<usize>>,
    word_lengths: Vec<usize>,
    orders: Vec<u64>,
}

fn operator_cayley(
    data: &PhaseData,
    closure_cap: usize,
) -> Result<(Vec<MonomialOperator>, CayleyTable)> {
    let size = data.space().size();
    let p = data.space().p();
    let gens: Vec<MonomialOperator> = data
        .generators()
        .iter()
        .map(|g| realize(data, data.space().encode(&g.translation), &g.phase))
        .collect();

    // closure work and memory scale with |G| * |A|, so the element cap is
    // tightened on large spaces
    let work_cap = ((1usize << 23) / (size as usize).max(1)).max(16);
    let closure_cap = closure_cap.min(work_cap);

    let mut elems = vec![MonomialOperator::identity(size, p)];
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    index.insert(elems[0].key(), 0);
    let mut word_lengths = vec![0usize];
    let mut products: Vec<Vec<usize>> = Vec::new();
    let mut frontier = std::collections::VecDeque::from([0usize]);
    while let Some(e) = frontier.pop_front() {
        while products.len() <= e {
            products.push(Vec::new());
        }
        if !products[e].is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(gens.len());
        for g in &gens {
            let prod = elems[e].compose(g);
            let key = prod.key();
            let idx = match index.get(&key) {
                Some(&i) => i,
                None => {
                    if elems.len() >= closure_cap {
                        return Err(Error::SignatureTooLarge {
                            what: format!(
                                "operator closure; partial order profile {:?}",
                                profile_of(&elems, &word_lengths)
                            ),
                            limit: closure_cap,
                        });
                    }
                    let i = elems.len();
                    index.insert(key, i);
                    word_lengths.push(word_lengths[e] + 1);
                    elems.push(prod);
                    frontier.push_back(i);
                    i
                }
            };
            row.push(idx);
        }
        products[e] = row;
    }
    while products.len() < elems.len() {
        products.push(Vec::new());
    }
    // complete any rows skipped by the frontier ordering
    for e in 0..elems.len() {
        if products[e].is_empty() && !gens.is_empty() {
            products[e] = gens
                .iter()
                .map(|g| index[&elems[e].compose(g).key()])
                .collect();
        }
    }
    let orders = elems.iter().map(MonomialOperator::order).collect();
    Ok((
        elems,
        CayleyTable {
            products,
            word_lengths,
            orders,
        },
    ))
}

fn profile_of(elems: &[MonomialOperator], word_lengths: &[usize]) -> Vec<(u64, usize)> {
    let mut profile: Vec<(u64, usize)> = elems
        .iter()
        .zip(word_lengths.iter())
        .map(|(e, &w)| (e.order(), w))
        .collect();
    profile.sort_unstable();
    profile
}

/// Serialized multiplication table under one generator ordering: a BFS over
/// the abstract Cayley graph that assigns indices in discovery order, so the
/// byte string depends only on the labeled isomorphism class.
fn canonical_bytes(table: &CayleyTable, perm: &[usize]) -> Vec<u8> {
    let n = table.products.len();
    let mut relabel = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    relabel[0] = 0;
    order.push(0usize);
    let mut head = 0;
    while head < order.len() {
        let e = order[head];
        head += 1;
        for &g in perm {
            let t = table.products[e][g];
            if relabel[t] == usize::MAX {
                relabel[t] = order.len();
                order.push(t);
            }
        }
    }
    let mut bytes = Vec::with_capacity(order.len() * perm.len() * 4 + 8);
    for &e in &order {
        for &g in perm {
            let t = relabel[table.products[e][g]];
            bytes.extend_from_slice(&(t as u32).to_le_bytes());
        }
    }
    // element orders in relabeled sequence pin the isomorphism type further
    for &e in &order {
        bytes.extend_from_slice(&table.orders[e].to_le_bytes());
    }
    bytes
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    heap_permute(&mut items, n, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k.is_multiple_of(2) {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// Canonical fingerprint of the realized operator structure of `data`.
pub fn interaction_signature(data: &PhaseData, closure_cap: usize) -> Result<InteractionSignature> {
    if data.generators().is_empty() {
        return Ok(InteractionSignature::trivial());
    }
    let r = data.generators().len();
    if r > 8 {
        return Err(Error::SignatureTooLarge {
            what: "generator relabeling search (more than 8 generators)".into(),
            limit: 8,
        });
    }
    let (elems, table) = operator_cayley(data, closure_cap)?;
    let perm_count: usize = (1..=r).product();
    if perm_count * elems.len() * r > SIGNATURE_PERM_BUDGET {
        return Err(Error::SignatureTooLarge {
            what: format!(
                "relabeling search {} perms x {} elements; partial order profile {:?}",
                perm_count,
                elems.len(),
                profile_of(&elems, &table.word_lengths)
            ),
            limit: SIGNATURE_PERM_BUDGET,
        });
    }
    let mut best: Option<Vec<u8>> = None;
    for perm in permutations(r) {
        let bytes = canonical_bytes(&table, &perm);
        if best.as_ref().is_none_or(|b| bytes < *b) {
            best = Some(bytes);
        }
    }
    let hash = Sha256::digest(best.unwrap());
    let mut order_profile = profile_of(&elems, &table.word_lengths);
    order_profile.sort_unstable();
    Ok(InteractionSignature {
        fingerprint: hex_prefix(&hash),
        order_profile,
        size: elems.len(),
    })
}
