//! The K-phase transmission structure with delayed CSIT.
//!
//! A K-user run spans T slots split into K phases. Phase 1 sends each user's
//! symbol vectors uncoded, one per slot; phase k >= 2 sends order-k messages
//! (linear combinations useful to k users, overheard as interference by the
//! rest). The order-2 combining vectors `w` are the only free parameters;
//! higher-order generation matrices are lifted recursively through constant
//! combining matrices and diagonal phase coefficients.
//!
//! Everything here is 0-based: slots 0..T-1, users 0..K-1, repetition
//! branches 0..L-1. Message order k keeps its semantic 1-based meaning
//! (order-2 = pairs).

use nalgebra::DMatrix;

use crate::channel::{csit_at, ChannelEpisode, CsitView};
use crate::{CMat, CVec, Error, Result, C64};

/// Largest supported user count; T grows as K! * K * H_K.
pub const MAX_USERS: usize = 6;

/// An exact reduced ratio, used for the symbols-per-slot efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Self {
        let g = gcd(num, den);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product::<usize>().max(1)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// All k-element subsets of {0, .., n-1} in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Timing arithmetic of one protocol run.
///
/// * L = (K-1)! repetition branches,
/// * phase k occupies T_k = L K / k slots and serves Q_k = C(K, k)
///   distinct user subsets, each for l_k = T_k / Q_k slot groups,
/// * total T = sum T_k, delivering K^2 L symbols: efficiency K^2 L / T.
#[derive(Debug, Clone)]
pub struct Schedule {
    users: usize,
    branches: usize,
    phase_slots: Vec<usize>,
    subset_counts: Vec<usize>,
    slots_per_subset: Vec<usize>,
    phase_start: Vec<usize>,
    total_slots: usize,
    dof: Rational,
}

/// Build the schedule for K users.
pub fn make_schedule(users: usize) -> Result<Schedule> {
    if !(2..=MAX_USERS).contains(&users) {
        return Err(Error::UsersOutOfRange(users));
    }
    let branches = factorial(users - 1);
    let mut phase_slots = Vec::with_capacity(users);
    let mut subset_counts = Vec::with_capacity(users);
    let mut slots_per_subset = Vec::with_capacity(users);
    for k in 1..=users {
        let t_k = branches * users / k;
        debug_assert_eq!(t_k * k, branches * users, "T_k integral by L = (K-1)!");
        let q_k = binomial(users, k);
        phase_slots.push(t_k);
        subset_counts.push(q_k);
        slots_per_subset.push(t_k / q_k);
    }
    let mut phase_start = Vec::with_capacity(users);
    let mut acc = 0;
    for &t in &phase_slots {
        phase_start.push(acc);
        acc += t;
    }
    let total_slots = acc;
    let dof = Rational::new((users * users * branches) as u64, total_slots as u64);
    Ok(Schedule {
        users,
        branches,
        phase_slots,
        subset_counts,
        slots_per_subset,
        phase_start,
        total_slots,
        dof,
    })
}

impl Schedule {
    pub fn users(&self) -> usize {
        self.users
    }

    /// Number of repetition branches L.
    pub fn branches(&self) -> usize {
        self.branches
    }

    /// T_k: slots in phase `order` (1..=K).
    pub fn slots_in_phase(&self, order: usize) -> usize {
        self.phase_slots[order - 1]
    }

    /// Q_k: distinct user subsets served in phase `order`.
    pub fn subset_count(&self, order: usize) -> usize {
        self.subset_counts[order - 1]
    }

    /// l_k = T_k / Q_k: slot groups per subset in phase `order`.
    pub fn slots_per_subset(&self, order: usize) -> usize {
        self.slots_per_subset[order - 1]
    }

    /// First slot (0-based) of phase `order`.
    pub fn phase_start(&self, order: usize) -> usize {
        self.phase_start[order - 1]
    }

    pub fn total_slots(&self) -> usize {
        self.total_slots
    }

    /// Symbols delivered per slot, exact.
    pub fn dof(&self) -> Rational {
        self.dof
    }

    /// Phase-1 slot (0-based) carrying symbol vector s of `owner` on `branch`.
    pub fn phase1_slot(&self, owner: usize, branch: usize) -> usize {
        self.users * branch + owner
    }

    /// Row offset of branch `branch`'s block inside phase `order` (>= 2).
    /// The final phase has a single full-height block.
    pub fn branch_offset(&self, order: usize, branch: usize) -> usize {
        if order == self.users {
            return 0;
        }
        let l_k = self.slots_per_subset(order);
        let group = ((branch + 1) * l_k).div_ceil(self.branches) - 1;
        group * self.subset_count(order)
    }

    /// Transmit antenna (0-based) carrying branch `branch`'s order-`order`
    /// messages. The final phase always uses antenna 0. For K <= 3 the
    /// printed per-branch assignment (antenna = branch) applies; for larger
    /// K the index follows s = ((l * l_k) mod L) mod k with s = 0 mapped
    /// back into the 1-based antenna range.
    pub fn message_antenna(&self, order: usize, branch: usize) -> usize {
        if order == self.users {
            return 0;
        }
        if self.users <= 3 {
            return branch;
        }
        let s = (((branch + 1) * self.slots_per_subset(order)) % self.branches) % order;
        if s == 0 {
            0
        } else {
            s - 1
        }
    }

    /// Total order-2 power budget K * T_2.
    pub fn power_budget(&self) -> f64 {
        (self.users * self.slots_in_phase(2)) as f64
    }
}

/// Nonzero-block pattern of the order-k message generation matrix: one row
/// per k-subset of users, enumerated lexicographically.
#[derive(Debug, Clone)]
pub struct GenMatrixTemplate {
    users: usize,
    order: usize,
    rows: Vec<Vec<usize>>,
}

/// Template for order-`order` generation matrices over `users` users.
pub fn gen_matrix_template(users: usize, order: usize) -> Result<GenMatrixTemplate> {
    if !(2..=users).contains(&order) {
        return Err(Error::DimensionMismatch {
            expected: users,
            got: order,
            context: "message order must satisfy 2 <= k <= K",
        });
    }
    Ok(GenMatrixTemplate {
        users,
        order,
        rows: k_subsets(users, order),
    })
}

impl GenMatrixTemplate {
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn row_subset(&self, row: usize) -> &[usize] {
        &self.rows[row]
    }

    /// For order 2: the peer sharing `row` with `user`, if `user` is in it.
    pub fn partner(&self, row: usize, user: usize) -> Option<usize> {
        let s = &self.rows[row];
        if !s.contains(&user) {
            return None;
        }
        s.iter().copied().find(|&u| u != user)
    }
}

/// The order-2 combining vectors w for every (branch, owner, peer) triple,
/// owner != peer. `w[branch][owner][peer]` multiplies the owner's symbol
/// vector inside the order-2 message shared by owner and peer.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    users: usize,
    branches: usize,
    vectors: Vec<CVec>,
}

impl PrecoderSet {
    pub fn zeros(users: usize, branches: usize) -> Self {
        let n = branches * users * (users - 1);
        Self {
            users,
            branches,
            vectors: vec![CVec::zeros(users); n],
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn branches(&self) -> usize {
        self.branches
    }

    fn index(&self, branch: usize, owner: usize, peer: usize) -> usize {
        debug_assert!(owner != peer && owner < self.users && peer < self.users);
        let pair = owner * (self.users - 1) + if peer < owner { peer } else { peer - 1 };
        branch * self.users * (self.users - 1) + pair
    }

    pub fn get(&self, branch: usize, owner: usize, peer: usize) -> &CVec {
        &self.vectors[self.index(branch, owner, peer)]
    }

    pub fn set(&mut self, branch: usize, owner: usize, peer: usize, w: CVec) {
        let i = self.index(branch, owner, peer);
        self.vectors[i] = w;
    }

    /// Iterate all (branch, owner, peer) triples in storage order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let users = self.users;
        (0..self.branches).flat_map(move |b| {
            (0..users)
                .flat_map(move |j| (0..users).filter(move |&i| i != j).map(move |i| (b, j, i)))
        })
    }

    /// Assemble W_owner(2) on `branch`: Q_2 x K, row r = w(owner, peer_r)^T
    /// when the owner belongs to subset r, zero otherwise.
    pub fn order2_matrix(&self, branch: usize, owner: usize) -> CMat {
        let subsets = k_subsets(self.users, 2);
        let mut w = CMat::zeros(subsets.len(), self.users);
        for (r, s) in subsets.iter().enumerate() {
            if !s.contains(&owner) {
                continue;
            }
            let peer = s
                .iter()
                .copied()
                .find(|&u| u != owner)
                .expect("pair subset");
            let v = self.get(branch, owner, peer);
            for c in 0..self.users {
                w[(r, c)] = v[c];
            }
        }
        w
    }

    /// Sum of squared Frobenius norms of all order-2 generation matrices.
    pub fn total_power(&self) -> f64 {
        self.vectors.iter().map(|v| v.norm_squared()).sum()
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.vectors {
            *v *= C64::from(c);
        }
    }

    /// Scale down onto the power budget if it is exceeded.
    pub fn project_to_budget(&mut self, budget: f64) {
        let p = self.total_power();
        if p > budget * (1.0 + 1e-12) {
            self.scale((budget / p).sqrt());
        }
    }

    /// Scale (up or down) so total power equals the budget exactly.
    pub fn normalize_to_budget(&mut self, budget: f64) {
        let p = self.total_power();
        if p > 0.0 {
            self.scale((budget / p).sqrt());
        }
    }
}

/// Constants of the recursive lift W(k+1) = C(k) diag(lambda(k)) W(k).
///
/// The combining matrices C(k) are fixed, known to everyone, and shared by
/// all branches: row r of C(k) (an order-(k+1) subset) is nonzero exactly at
/// the k+1 order-k subsets it contains, with masked-Vandermonde values that
/// guarantee distinct row patterns and, for the final lift, full rank with
/// no zero entries. The diagonals lambda hold the phase-k channel
/// coefficients of the one user each order-k message excludes, on the
/// antenna the message was sent from.
#[derive(Debug, Clone)]
pub struct LiftingConstants {
    users: usize,
    branches: usize,
    combining: Vec<CMat>,
    lambda: Vec<Vec<CVec>>,
}

/// The episode-independent combining matrices C(2), .., C(K-1).
///
/// Each row is a masked Vandermonde row (node r+1, powers by column),
/// scaled to unit norm. The scaling keeps every required property (nonzero
/// patterns, pairwise-distinct rows, full rank of the final lift) while
/// bounding the lifted generation matrices; raw nodes grow like Q^Q and
/// overflow the received covariances beyond four users.
pub fn combining_constants(schedule: &Schedule) -> Vec<CMat> {
    let k_users = schedule.users();
    let mut out = Vec::new();
    for k in 2..k_users {
        let cols = schedule.subset_count(k);
        let (rows, mask): (usize, Option<(Vec<Vec<usize>>, Vec<Vec<usize>>)>) = if k + 1 < k_users {
            (
                schedule.subset_count(k + 1),
                Some((k_subsets(k_users, k + 1), k_subsets(k_users, k))),
            )
        } else {
            // Final lift: T_K x Q_{K-1}, full rank, no zero entries.
            (schedule.slots_in_phase(k_users), None)
        };
        let mut c = CMat::zeros(rows, cols);
        for r in 0..rows {
            let node = (r + 1) as f64;
            for col in 0..cols {
                let keep = match &mask {
                    None => true,
                    Some((row_sets, col_sets)) => {
                        col_sets[col].iter().all(|u| row_sets[r].contains(u))
                    }
                };
                if keep {
                    c[(r, col)] = C64::from(node.powi(col as i32));
                }
            }
            let norm = c.row(r).norm();
            for col in 0..cols {
                c[(r, col)] /= C64::from(norm);
            }
        }
        out.push(c);
    }
    out
}

/// Build the lifting constants for one channel episode.
pub fn make_lifting_constants(
    schedule: &Schedule,
    episode: &ChannelEpisode,
) -> Result<LiftingConstants> {
    if episode.users() != schedule.users() {
        return Err(Error::DimensionMismatch {
            expected: schedule.users(),
            got: episode.users(),
            context: "episode user count",
        });
    }
    if episode.total_slots() != schedule.total_slots() {
        return Err(Error::SlotOutOfRange {
            slot: episode.total_slots(),
            total: schedule.total_slots(),
        });
    }
    let k_users = schedule.users();
    let combining = combining_constants(schedule);
    let mut lambda = Vec::new();
    for k in 2..k_users {
        let subsets = k_subsets(k_users, k);
        let mut per_branch = Vec::with_capacity(schedule.branches());
        for branch in 0..schedule.branches() {
            let antenna = schedule.message_antenna(k, branch);
            let base = schedule.phase_start(k) + schedule.branch_offset(k, branch);
            let mut diag = CVec::zeros(subsets.len());
            for (r, s) in subsets.iter().enumerate() {
                let excluded = (0..k_users)
                    .find(|u| !s.contains(u))
                    .expect("k < K leaves at least one user out");
                diag[r] = episode.coeff(excluded, antenna, base + r);
            }
            per_branch.push(diag);
        }
        lambda.push(per_branch);
    }
    Ok(LiftingConstants {
        users: k_users,
        branches: schedule.branches(),
        combining,
        lambda,
    })
}

impl LiftingConstants {
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn branches(&self) -> usize {
        self.branches
    }

    /// C(order), lifting order -> order + 1. Valid for 2 <= order <= K-1.
    pub fn combining(&self, order: usize) -> &CMat {
        &self.combining[order - 2]
    }

    /// Diagonal entries of lambda(order) on `branch`.
    pub fn lambda(&self, order: usize, branch: usize) -> &CVec {
        &self.lambda[order - 2][branch]
    }

    pub fn is_empty(&self) -> bool {
        self.combining.is_empty()
    }
}

/// One step of the recursive lift: W(k+1) = C(k) diag(lambda(k)) W(k).
pub fn lift_generation_matrix(
    w: &CMat,
    constants: &LiftingConstants,
    order: usize,
    branch: usize,
) -> Result<CMat> {
    let c = constants.combining(order);
    let lam = constants.lambda(order, branch);
    if w.nrows() != c.ncols() || w.nrows() != lam.len() {
        return Err(Error::DimensionMismatch {
            expected: c.ncols(),
            got: w.nrows(),
            context: "generation matrix height must match combining width",
        });
    }
    Ok(c * DMatrix::from_diagonal(lam) * w)
}

/// A stacked T x K matrix through which one symbol vector reaches one
/// receiver across the whole run, plus its identifying tags. In virtual
/// form the unknown present-phase coefficients (the receive diagonals and
/// the lift diagonals) are replaced by ones, so the matrix depends only on
/// phase-1 channels and the precoders.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    matrix: CMat,
    receiver: usize,
    owner: usize,
    branch: usize,
    virtual_form: bool,
}

impl EffectiveChannel {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn receiver(&self) -> usize {
        self.receiver
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn branch(&self) -> usize {
        self.branch
    }

    pub fn is_virtual(&self) -> bool {
        self.virtual_form
    }
}

/// Assemble the effective channel of (`receiver`, `owner`, `branch`).
///
/// With `virtual_form` the result is built from delayed CSIT only (it
/// delegates to [`virtual_channel`] on a phase-1 view of the episode);
/// otherwise the true receive coefficients and lift diagonals are used.
pub fn assemble_effective_channel(
    schedule: &Schedule,
    receiver: usize,
    owner: usize,
    branch: usize,
    episode: &ChannelEpisode,
    precoders: &PrecoderSet,
    constants: &LiftingConstants,
    virtual_form: bool,
) -> Result<EffectiveChannel> {
    if virtual_form {
        let view = csit_at(episode, schedule.phase_start(2))?;
        let combining = combining_constants(schedule);
        return virtual_channel(
            schedule, receiver, owner, branch, &view, precoders, &combining,
        );
    }
    let k_users = schedule.users();
    let t_total = schedule.total_slots();
    let mut m = CMat::zeros(t_total, k_users);
    let p1 = schedule.phase1_slot(owner, branch);
    m.row_mut(p1)
        .copy_from(&episode.h(receiver, p1).transpose());
    let mut w = precoders.order2_matrix(branch, owner);
    for k in 2..=k_users {
        if k > 2 {
            w = lift_generation_matrix(&w, constants, k - 1, branch)?;
        }
        let base = schedule.phase_start(k) + schedule.branch_offset(k, branch);
        let antenna = schedule.message_antenna(k, branch);
        for r in 0..w.nrows() {
            let d = episode.coeff(receiver, antenna, base + r);
            for c in 0..k_users {
                m[(base + r, c)] = d * w[(r, c)];
            }
        }
    }
    Ok(EffectiveChannel {
        matrix: m,
        receiver,
        owner,
        branch,
        virtual_form: false,
    })
}

/// Assemble the virtual channel of (`receiver`, `owner`, `branch`) from a
/// delayed-CSIT view covering phase 1. All present-phase coefficients are
/// set to one, so only phase-1 slots of the view are ever read.
pub fn virtual_channel(
    schedule: &Schedule,
    receiver: usize,
    owner: usize,
    branch: usize,
    view: &CsitView<'_>,
    precoders: &PrecoderSet,
    combining: &[CMat],
) -> Result<EffectiveChannel> {
    let k_users = schedule.users();
    if view.known_slots() < schedule.slots_in_phase(1) {
        return Err(Error::SlotOutOfRange {
            slot: view.known_slots(),
            total: schedule.slots_in_phase(1),
        });
    }
    let t_total = schedule.total_slots();
    let mut m = CMat::zeros(t_total, k_users);
    let p1 = schedule.phase1_slot(owner, branch);
    m.row_mut(p1).copy_from(&view.h(receiver, p1).transpose());
    let mut w = precoders.order2_matrix(branch, owner);
    for k in 2..=k_users {
        if k > 2 {
            w = &combining[k - 3] * &w;
        }
        let base = schedule.phase_start(k) + schedule.branch_offset(k, branch);
        for r in 0..w.nrows() {
            for c in 0..k_users {
                m[(base + r, c)] = w[(r, c)];
            }
        }
    }
    Ok(EffectiveChannel {
        matrix: m,
        receiver,
        owner,
        branch,
        virtual_form: true,
    })
}

/// The linear response of a virtual channel to its order-2 generation
/// matrix: H = H_phase1 + chain * W(2). Rows covering phase 1 are zero, the
/// phase-2 block holds the identity, later blocks hold the accumulated
/// combining products.
pub fn order2_chain(schedule: &Schedule, combining: &[CMat], branch: usize) -> CMat {
    let k_users = schedule.users();
    let q2 = schedule.subset_count(2);
    let mut chain = CMat::zeros(schedule.total_slots(), q2);
    let mut p = CMat::identity(q2, q2);
    for k in 2..=k_users {
        if k > 2 {
            p = &combining[k - 3] * &p;
        }
        let base = schedule.phase_start(k) + schedule.branch_offset(k, branch);
        for r in 0..p.nrows() {
            for c in 0..q2 {
                chain[(base + r, c)] = p[(r, c)];
            }
        }
    }
    chain
}
