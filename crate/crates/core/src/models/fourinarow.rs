//! Four-in-a-row on a 4x9 board, played by a heuristic-search model: moves
//! are scored by a noisy weighted sum of board-pattern features, weak moves
//! are pruned relative to the best sibling, and a small best-first tree is
//! grown before committing to the principal variation's root move.
//!
//! There is no tractable expression for the move distribution; this model is
//! the estimator's genuinely likelihood-free case study.

use std::fmt;
use std::sync::LazyLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Dataset, ParamBounds, ParameterSpace, ResponseSpace, Simulator, TrialData};
use crate::error::{Error, Result};
use crate::rng::{unit_stream, Stream};

pub const ROWS: usize = 4;
pub const COLS: usize = 9;
pub const CELLS: usize = ROWS * COLS;

// Fixed model constants: feature weights, active/passive scaling, tree size
// (node budget = ceil(1 / TREE_GAMMA)) and the uniform-move lapse rate.
pub const W_CENTER: f64 = 0.60913;
pub const W_CONNECTED_TWO: f64 = 0.90444;
pub const W_UNCONNECTED_TWO: f64 = 0.45076;
pub const W_THREE: f64 = 3.4272;
pub const W_FOUR: f64 = 6.1728;
pub const C_ACT: f64 = 0.92498;
pub const TREE_GAMMA: f64 = 0.02;
pub const NODE_BUDGET: usize = 50;
pub const LAPSE_RATE: f64 = 0.05;

pub const ETA: usize = 0;
pub const XI: usize = 1;
pub const DELTA: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    Black,
    White,
}

impl Player {
    #[inline]
    pub fn opponent(self) -> Player {
        match self {
            Player::Black => Player::White,
            Player::White => Player::Black,
        }
    }

    #[inline]
    fn index(self) -> usize {
        match self {
            Player::Black => 0,
            Player::White => 1,
        }
    }
}

/// Board state: 36 cells plus the player to move. Black moves first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Board {
    cells: [Option<Player>; CELLS],
    to_move: Player,
}

/// All 4-cell lines: 24 horizontal, 9 vertical, 12 diagonal.
static WINDOWS: LazyLock<Vec<[usize; 4]>> = LazyLock::new(|| {
    let mut w = Vec::with_capacity(45);
    let at = |r: usize, c: usize| r * COLS + c;
    for r in 0..ROWS {
        for c in 0..=COLS - 4 {
            w.push([at(r, c), at(r, c + 1), at(r, c + 2), at(r, c + 3)]);
        }
    }
    for c in 0..COLS {
        w.push([at(0, c), at(1, c), at(2, c), at(3, c)]);
    }
    for c in 0..=COLS - 4 {
        w.push([at(0, c), at(1, c + 1), at(2, c + 2), at(3, c + 3)]);
        w.push([at(3, c), at(2, c + 1), at(1, c + 2), at(0, c + 3)]);
    }
    w
});

/// Window indices touching each cell.
static CELL_WINDOWS: LazyLock<Vec<Vec<u16>>> = LazyLock::new(|| {
    let mut map = vec![Vec::new(); CELLS];
    for (i, w) in WINDOWS.iter().enumerate() {
        for &cell in w {
            map[cell].push(i as u16);
        }
    }
    map
});

/// Per-cell center-proximity value: 1 / (1 + Euclidean distance to the
/// board center).
static CENTER_VALUE: LazyLock<[f64; CELLS]> = LazyLock::new(|| {
    let mut v = [0.0; CELLS];
    for (i, value) in v.iter_mut().enumerate() {
        let r = (i / COLS) as f64;
        let c = (i % COLS) as f64;
        let d = ((r - 1.5).powi(2) + (c - 4.0).powi(2)).sqrt();
        *value = 1.0 / (1.0 + d);
    }
    v
});

impl Board {
    pub fn empty() -> Board {
        Board { cells: [None; CELLS], to_move: Player::Black }
    }

    #[inline]
    pub fn to_move(&self) -> Player {
        self.to_move
    }

    #[inline]
    pub fn cell(&self, idx: usize) -> Option<Player> {
        self.cells[idx]
    }

    pub fn piece_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn legal_moves(&self) -> Vec<u8> {
        (0..CELLS as u8).filter(|&i| self.cells[i as usize].is_none()).collect()
    }

    /// Place a piece for the player to move; panics on occupied cells.
    pub fn apply(&self, mv: u8) -> Board {
        assert!(self.cells[mv as usize].is_none(), "apply: cell {mv} occupied");
        let mut next = self.clone();
        next.cells[mv as usize] = Some(self.to_move);
        next.to_move = self.to_move.opponent();
        next
    }

    /// Any completed 4-in-a-row for `player`.
    pub fn has_four(&self, player: Player) -> bool {
        WINDOWS
            .iter()
            .any(|w| w.iter().all(|&c| self.cells[c] == Some(player)))
    }

    /// The game is over: someone has four in a row or the board is full.
    pub fn is_terminal(&self) -> bool {
        self.has_four(Player::Black) || self.has_four(Player::White) || self.piece_count() == CELLS
    }

    /// Structural legality: counts consistent with alternating play starting
    /// with black, and the player to move cannot already own a four.
    pub fn validate(&self) -> Result<()> {
        let nb = self.cells.iter().filter(|c| **c == Some(Player::Black)).count();
        let nw = self.cells.iter().filter(|c| **c == Some(Player::White)).count();
        let counts_ok = match self.to_move {
            Player::Black => nb == nw,
            Player::White => nb == nw + 1,
        };
        if !counts_ok {
            return Err(Error::Data(format!(
                "illegal piece counts: {nb} black / {nw} white with {:?} to move",
                self.to_move
            )));
        }
        if self.has_four(self.to_move) {
            return Err(Error::Data(
                "illegal board: player to move already has four in a row".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Debug for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Board({self})")
    }
}

impl fmt::Display for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for cell in &self.cells {
            f.write_str(match cell {
                None => ".",
                Some(Player::Black) => "b",
                Some(Player::White) => "w",
            })?;
        }
        f.write_str(match self.to_move {
            Player::Black => ":b",
            Player::White => ":w",
        })
    }
}

impl std::str::FromStr for Board {
    type Err = Error;

    fn from_str(s: &str) -> Result<Board> {
        let bytes = s.as_bytes();
        if bytes.len() != CELLS + 2 || bytes[CELLS] != b':' {
            return Err(Error::Data(format!("bad board string: {s:?}")));
        }
        let mut cells = [None; CELLS];
        for (i, &b) in bytes[..CELLS].iter().enumerate() {
            cells[i] = match b {
                b'.' => None,
                b'b' => Some(Player::Black),
                b'w' => Some(Player::White),
                _ => return Err(Error::Data(format!("bad board cell {:?}", b as char))),
            };
        }
        let to_move = match bytes[CELLS + 1] {
            b'b' => Player::Black,
            b'w' => Player::White,
            _ => return Err(Error::Data("bad to-move marker".into())),
        };
        Ok(Board { cells, to_move })
    }
}

impl Serialize for Board {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Board {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Board, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Pattern-class counts per player, plus the center-proximity sums.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureCounts {
    pub center: [f64; 2],
    pub connected_two: [i32; 2],
    pub unconnected_two: [i32; 2],
    pub three: [i32; 2],
    pub four: [i32; 2],
}

/// Classify one window's contribution: windows containing both colors are
/// dead; otherwise the owning player's pattern class depends on the piece
/// count and, for pairs, on adjacency within the window.
#[inline]
fn window_contribution(board: &Board, window: &[usize; 4], counts: &mut FeatureCounts, sign: i32) {
    let mut nb = 0u8;
    let mut nw = 0u8;
    let mut mask = 0u8;
    for (pos, &cell) in window.iter().enumerate() {
        match board.cells[cell] {
            Some(Player::Black) => {
                nb += 1;
                mask |= 1 << pos;
            }
            Some(Player::White) => {
                nw += 1;
                mask |= 1 << pos;
            }
            None => {}
        }
    }
    let (player, n) = match (nb, nw) {
        (0, 0) => return,
        (n, 0) => (0usize, n),
        (0, n) => (1usize, n),
        _ => return, // dead window
    };
    match n {
        2 => {
            // adjacent pair within the window: 0b0011, 0b0110, 0b1100
            let connected = mask == 0b0011 || mask == 0b0110 || mask == 0b1100;
            if connected {
                counts.connected_two[player] += sign;
            } else {
                counts.unconnected_two[player] += sign;
            }
        }
        3 => counts.three[player] += sign,
        4 => counts.four[player] += sign,
        _ => {}
    }
}

fn feature_counts_unchecked(board: &Board) -> FeatureCounts {
    let mut counts = FeatureCounts::default();
    for w in WINDOWS.iter() {
        window_contribution(board, w, &mut counts, 1);
    }
    for (i, cell) in board.cells.iter().enumerate() {
        if let Some(p) = cell {
            counts.center[p.index()] += CENTER_VALUE[i];
        }
    }
    counts
}

/// Feature counts for a legal board.
pub fn feature_counts(board: &Board) -> Result<FeatureCounts> {
    board.validate()?;
    Ok(feature_counts_unchecked(board))
}

/// Counts after `mover` plays `mv` on `before`, updated incrementally from
/// the parent's counts: only windows through the move cell change.
fn feature_counts_after(
    before: &Board,
    after: &Board,
    parent: &FeatureCounts,
    mv: u8,
    mover: Player,
) -> FeatureCounts {
    let mut counts = *parent;
    counts.center[mover.index()] += CENTER_VALUE[mv as usize];
    for &wi in &CELL_WINDOWS[mv as usize] {
        let w = &WINDOWS[wi as usize];
        window_contribution(before, w, &mut counts, -1);
        window_contribution(after, w, &mut counts, 1);
    }
    counts
}

fn weighted_sum(counts: &FeatureCounts, player: usize, keep: &[f64; 5]) -> f64 {
    keep[0] * W_CENTER * counts.center[player]
        + keep[1] * W_CONNECTED_TWO * counts.connected_two[player] as f64
        + keep[2] * W_UNCONNECTED_TWO * counts.unconnected_two[player] as f64
        + keep[3] * W_THREE * counts.three[player] as f64
        + keep[4] * W_FOUR * counts.four[player] as f64
}

/// Noisy value of a resulting position from the mover's perspective. Each of
/// the ten (class, player) features is independently dropped with probability
/// delta; the mover is the passive player in the resulting position and its
/// feature sum is scaled by `C_ACT`.
fn value_of_counts(counts: &FeatureCounts, mover: Player, theta: &[f64], rng: &mut Stream) -> f64 {
    let delta = theta[DELTA];
    let mut keep_own = [1.0; 5];
    let mut keep_opp = [1.0; 5];
    if delta > 0.0 {
        for k in keep_own.iter_mut().chain(keep_opp.iter_mut()) {
            if rng.gen::<f64>() < delta {
                *k = 0.0;
            }
        }
    }
    let own = weighted_sum(counts, mover.index(), &keep_own);
    let opp = weighted_sum(counts, mover.opponent().index(), &keep_opp);
    let sigma = theta[ETA].exp();
    let noise: f64 = rng.sample(StandardNormal);
    C_ACT * own - opp + sigma * noise
}

/// One noisy evaluation of `mv` on `board` for the player to move.
pub fn move_value(board: &Board, mv: u8, theta: &[f64], rng: &mut Stream) -> Result<f64> {
    board.validate()?;
    if board.cells[mv as usize].is_some() {
        return Err(Error::Data(format!("illegal move {mv}: cell occupied")));
    }
    let mover = board.to_move;
    let after = board.apply(mv);
    let parent = feature_counts_unchecked(board);
    let counts = feature_counts_after(board, &after, &parent, mv, mover);
    Ok(value_of_counts(&counts, mover, theta, rng))
}

struct Node {
    board: Board,
    counts: FeatureCounts,
    /// Value from the perspective of the player who moved into this node;
    /// replaced by the negamax backup once the node is expanded.
    value: f64,
    mv: u8,
    children: Vec<usize>,
    expanded: bool,
    terminal: bool,
}

/// Evaluate and prune the children of `parent_idx`; returns false if the
/// node had no legal moves.
fn expand_node(arena: &mut Vec<Node>, parent_idx: usize, theta: &[f64], rng: &mut Stream) -> bool {
    let xi = theta[XI];
    let (board, parent_counts) = {
        let n = &arena[parent_idx];
        (n.board.clone(), n.counts)
    };
    let mover = board.to_move();
    let moves = board.legal_moves();
    if moves.is_empty() {
        arena[parent_idx].terminal = true;
        return false;
    }
    let mut evaluated: Vec<(u8, Board, FeatureCounts, f64, bool)> = Vec::with_capacity(moves.len());
    let mut best = f64::NEG_INFINITY;
    for mv in moves {
        let after = board.apply(mv);
        let counts = feature_counts_after(&board, &after, &parent_counts, mv, mover);
        let value = value_of_counts(&counts, mover, theta, rng);
        let terminal = counts.four[mover.index()] > 0 || after.piece_count() == CELLS;
        best = best.max(value);
        evaluated.push((mv, after, counts, value, terminal));
    }
    let mut children = Vec::new();
    for (mv, after, counts, value, terminal) in evaluated {
        if value >= best - xi {
            arena.push(Node {
                board: after,
                counts,
                value,
                mv,
                children: Vec::new(),
                expanded: false,
                terminal,
            });
            children.push(arena.len() - 1);
        }
    }
    arena[parent_idx].children = children;
    arena[parent_idx].expanded = true;
    true
}

/// Pick a move by pruned best-first search: repeatedly walk the principal
/// variation (each player maximizing its own-perspective values), expand the
/// leaf, and back values up with a negamax flip, within the node budget.
pub fn search_move(board: &Board, theta: &[f64], rng: &mut Stream) -> Result<u8> {
    board.validate()?;
    if board.legal_moves().is_empty() {
        return Err(Error::NoLegalMoves);
    }
    let root_counts = feature_counts_unchecked(board);
    let mut arena = vec![Node {
        board: board.clone(),
        counts: root_counts,
        value: 0.0,
        mv: u8::MAX,
        children: Vec::new(),
        expanded: false,
        terminal: false,
    }];
    let mut expansions = 0usize;
    while expansions < NODE_BUDGET {
        // descend the principal variation
        let mut path = vec![0usize];
        loop {
            let cur = *path.last().unwrap();
            if !arena[cur].expanded || arena[cur].children.is_empty() {
                break;
            }
            let next = *arena[cur]
                .children
                .iter()
                .max_by(|&&a, &&b| arena[a].value.total_cmp(&arena[b].value))
                .unwrap();
            path.push(next);
        }
        let leaf = *path.last().unwrap();
        if arena[leaf].terminal {
            break; // principal variation ends in a decided game
        }
        if !expand_node(&mut arena, leaf, theta, rng) {
            break;
        }
        expansions += 1;
        // negamax backup along the path
        for &idx in path.iter().rev() {
            if arena[idx].expanded && !arena[idx].children.is_empty() {
                let best = arena[idx]
                    .children
                    .iter()
                    .map(|&c| arena[c].value)
                    .fold(f64::NEG_INFINITY, f64::max);
                if idx != 0 {
                    arena[idx].value = -best;
                }
            }
        }
    }
    let best_child = arena[0]
        .children
        .iter()
        .max_by(|&&a, &&b| arena[a].value.total_cmp(&arena[b].value))
        .ok_or(Error::NoLegalMoves)?;
    Ok(arena[*best_child].mv)
}

/// Full move policy: a uniform random legal move with the lapse probability,
/// otherwise the search policy.
pub fn simulate_move(board: &Board, theta: &[f64], rng: &mut Stream) -> Result<u8> {
    let legal = board.legal_moves();
    if legal.is_empty() {
        return Err(Error::NoLegalMoves);
    }
    if rng.gen::<f64>() < LAPSE_RATE {
        return Ok(legal[rng.gen_range(0..legal.len())]);
    }
    search_move(board, theta, rng)
}

/// theta = [eta, xi, delta]: log value-noise, pruning threshold, drop rate.
pub struct FourInARowModel;

impl Simulator for FourInARowModel {
    type Stimulus = Board;
    type Response = u8;

    fn name(&self) -> &'static str {
        "fourinarow"
    }

    fn simulate(&self, stimulus: &Board, theta: &[f64], rng: &mut Stream) -> u8 {
        simulate_move(stimulus, theta, rng).expect("stimulus board must have a legal move")
    }

    fn response_space(&self, stimulus: &Board) -> ResponseSpace<u8> {
        ResponseSpace::Finite(stimulus.legal_moves())
    }

    fn exact_trial_loglik(&self, _s: &Board, _r: &u8, _theta: &[f64]) -> Option<f64> {
        None // intractable: would require integrating over trees, drops, noise
    }

    fn parameter_space(&self) -> ParameterSpace {
        ParameterSpace {
            params: vec![
                ParamBounds::new("eta", 0.01f64.ln(), 5f64.ln(), 0.2f64.ln(), 3f64.ln()),
                ParamBounds::new("xi", 0.01, 10.0, 1.0, 10.0),
                ParamBounds::new("delta", 0.0, 1.0, 0.0, 0.5),
            ],
        }
    }
}

/// Baseline parameters used for self-play position generation.
pub const BASELINE_THETA: [f64; 3] = [0.0, 5.0, 0.2];

/// Legal, non-terminal positions from self-play of the baseline model with
/// two random opening plies, sampled without replacement.
pub fn generate_positions(count: usize, seed: u64) -> Vec<Board> {
    assert!(count >= 1);
    let mut rng = unit_stream(seed, 2);
    let mut pool: Vec<Board> = Vec::new();
    while pool.len() < count + count / 2 + 40 {
        let mut board = Board::empty();
        for ply in 0..CELLS {
            if board.is_terminal() {
                break;
            }
            if ply >= 2 {
                pool.push(board.clone());
            }
            let mv = if ply < 2 {
                let legal = board.legal_moves();
                legal[rng.gen_range(0..legal.len())]
            } else {
                simulate_move(&board, &BASELINE_THETA, &mut rng).expect("non-terminal board")
            };
            board = board.apply(mv);
        }
    }
    // partial Fisher-Yates: the first `count` entries become the sample
    for i in 0..count {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// Synthetic session: self-play positions as stimuli, one model move each.
pub fn generate(n: usize, theta: &[f64], seed: u64) -> Dataset<Board, u8> {
    let model = FourInARowModel;
    let positions = generate_positions(n, seed);
    let mut rng = unit_stream(seed, 3);
    let trials = positions
        .into_iter()
        .map(|board| {
            let response = model.simulate(&board, theta, &mut rng);
            TrialData { stimulus: board, response }
        })
        .collect();
    Dataset { trials }
}
