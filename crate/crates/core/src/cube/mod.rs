//! The 3x3x3 cube group: facelet states, quarter-turn generators and
//! compact state keys.
//!
//! Facelets are laid out face by face in the order U, R, F, D, L, B, each
//! face row-major as seen when looking straight at it with the cube held
//! F-front/U-top (U is viewed with B at the top edge, D with F at the top edge).
//!
//! ```text
//!              U0 U1 U2
//!              U3 U4 U5
//!              U6 U7 U8
//!  L36 L37 L38 F18 F19 F20 R9  R10 R11 B45 B46 B47
//!  L39 L40 L41 F21 F22 F23 R12 R13 R14 B48 B49 B50
//!  L42 L43 L44 F24 F25 F26 R15 R16 R17 B51 B52 B53
//!              D27 D28 D29
//!              D30 D31 D32
//!              D33 D34 D35
//! ```

mod tables;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

pub const NUM_FACELETS: usize = 54;
pub const NUM_MOVES: usize = 12;
/// Quarter-turn diameter of the cube group.
pub const DIAMETER: usize = 26;
/// Facelet indices of the six centres, in face order U, R, F, D, L, B.
pub const CENTERS: [usize; 6] = [4, 13, 22, 31, 40, 49];

/// A face of the cube. Facelet colours are named after the face whose
/// centre carries them, so the same enum doubles as the colour alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Face {
    U = 0,
    R = 1,
    F = 2,
    D = 3,
    L = 4,
    B = 5,
}

pub type Color = Face;

impl Face {
    /// Facelet order U, R, F, D, L, B.
    pub const ALL: [Face; 6] = [Face::U, Face::R, Face::F, Face::D, Face::L, Face::B];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Face> {
        Face::ALL.get(i).copied()
    }

    pub fn letter(self) -> char {
        match self {
            Face::U => 'U',
            Face::R => 'R',
            Face::F => 'F',
            Face::D => 'D',
            Face::L => 'L',
            Face::B => 'B',
        }
    }

    pub fn from_letter(c: char) -> Option<Face> {
        Some(match c {
            'U' => Face::U,
            'R' => Face::R,
            'F' => Face::F,
            'D' => Face::D,
            'L' => Face::L,
            'B' => Face::B,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Clockwise,
    CounterClockwise,
}

/// One quarter turn. The twelve moves are the generators and their
/// inverses, and label the edges of the Cayley graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub face: Face,
    pub direction: Direction,
}

impl Move {
    /// Canonical move order: U U' D D' L L' R R' F F' B B'.
    pub const ALL: [Move; NUM_MOVES] = [
        Move::cw(Face::U),
        Move::ccw(Face::U),
        Move::cw(Face::D),
        Move::ccw(Face::D),
        Move::cw(Face::L),
        Move::ccw(Face::L),
        Move::cw(Face::R),
        Move::ccw(Face::R),
        Move::cw(Face::F),
        Move::ccw(Face::F),
        Move::cw(Face::B),
        Move::ccw(Face::B),
    ];

    pub const fn cw(face: Face) -> Move {
        Move {
            face,
            direction: Direction::Clockwise,
        }
    }

    pub const fn ccw(face: Face) -> Move {
        Move {
            face,
            direction: Direction::CounterClockwise,
        }
    }

    /// Position in [`Move::ALL`].
    pub fn index(self) -> usize {
        let slot = match self.face {
            Face::U => 0,
            Face::D => 1,
            Face::L => 2,
            Face::R => 3,
            Face::F => 4,
            Face::B => 5,
        };
        2 * slot + usize::from(self.direction == Direction::CounterClockwise)
    }

    pub fn from_index(i: usize) -> Option<Move> {
        Move::ALL.get(i).copied()
    }

    pub fn inverse(self) -> Move {
        Move {
            face: self.face,
            direction: match self.direction {
                Direction::Clockwise => Direction::CounterClockwise,
                Direction::CounterClockwise => Direction::Clockwise,
            },
        }
    }

    /// Source-index permutation: after the move, `new[i] = old[perm[i]]`.
    pub fn permutation(self) -> &'static [u8; NUM_FACELETS] {
        match self.direction {
            Direction::Clockwise => &tables::CLOCKWISE[self.face.index()],
            Direction::CounterClockwise => &tables::COUNTER_CLOCKWISE[self.face.index()],
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.face.letter())?;
        if self.direction == Direction::CounterClockwise {
            write!(f, "'")?;
        }
        Ok(())
    }
}

impl FromStr for Move {
    type Err = Error;

    fn from_str(s: &str) -> Result<Move> {
        let mut chars = s.chars();
        let face = chars.next().and_then(Face::from_letter);
        let rest = chars.as_str();
        match (face, rest) {
            (Some(face), "") => Ok(Move::cw(face)),
            (Some(face), "'") => Ok(Move::ccw(face)),
            _ => Err(Error::ParseMove {
                token: s.to_string(),
                position: 1,
            }),
        }
    }
}

/// Parses a whitespace-separated quarter-turn scramble such as `"U R' F"`.
/// Positions in errors are 1-based token numbers.
pub fn parse_scramble(text: &str) -> Result<Vec<Move>> {
    text.split_whitespace()
        .enumerate()
        .map(|(i, token)| {
            token.parse::<Move>().map_err(|_| Error::ParseMove {
                token: token.to_string(),
                position: i + 1,
            })
        })
        .collect()
}

pub fn format_moves(moves: &[Move]) -> String {
    moves
        .iter()
        .map(Move::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// The move sequence that undoes `moves`.
pub fn invert_moves(moves: &[Move]) -> Vec<Move> {
    moves.iter().rev().map(|m| m.inverse()).collect()
}

/// Uniformly random quarter-turn sequence of exactly `length` moves.
pub fn random_moves<R: Rng + ?Sized>(length: usize, rng: &mut R) -> Vec<Move> {
    (0..length)
        .map(|_| Move::ALL[rng.gen_range(0..NUM_MOVES)])
        .collect()
}

/// A cube configuration stored as 54 colour codes (`Face as u8`).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CubeState {
    facelets: [u8; NUM_FACELETS],
}

const SOLVED: [u8; NUM_FACELETS] = {
    let mut f = [0u8; NUM_FACELETS];
    let mut i = 0;
    while i < NUM_FACELETS {
        f[i] = (i / 9) as u8;
        i += 1;
    }
    f
};

impl CubeState {
    pub fn solved() -> CubeState {
        CubeState { facelets: SOLVED }
    }

    pub fn is_solved(&self) -> bool {
        self.facelets == SOLVED
    }

    pub fn facelet(&self, i: usize) -> Color {
        Face::ALL[self.facelets[i] as usize]
    }

    /// Raw colour codes, one per facelet.
    pub fn codes(&self) -> &[u8; NUM_FACELETS] {
        &self.facelets
    }

    #[must_use]
    pub fn apply_move(&self, m: Move) -> CubeState {
        let perm = m.permutation();
        let mut facelets = [0u8; NUM_FACELETS];
        for (dst, &src) in facelets.iter_mut().zip(perm.iter()) {
            *dst = self.facelets[src as usize];
        }
        CubeState { facelets }
    }

    #[must_use]
    pub fn apply_moves(&self, moves: &[Move]) -> CubeState {
        moves.iter().fold(*self, |s, &m| s.apply_move(m))
    }

    /// The twelve neighbours in [`Move::ALL`] order.
    pub fn neighbors(&self) -> [(Move, CubeState); NUM_MOVES] {
        Move::ALL.map(|m| (m, self.apply_move(m)))
    }

    pub fn key(&self) -> StateKey {
        encode_state(self)
    }

    fn validate_codes(facelets: &[u8; NUM_FACELETS]) -> std::result::Result<(), String> {
        let mut counts = [0usize; 6];
        for &c in facelets {
            counts[c as usize] += 1;
        }
        if let Some(face) = Face::ALL.iter().find(|f| counts[f.index()] != 9) {
            return Err(format!(
                "colour {} appears {} times, expected 9",
                face.letter(),
                counts[face.index()]
            ));
        }
        for (face, &center) in Face::ALL.iter().zip(CENTERS.iter()) {
            if facelets[center] != *face as u8 {
                return Err(format!("centre facelet {center} must be {}", face.letter()));
            }
        }
        Ok(())
    }
}

impl Default for CubeState {
    fn default() -> Self {
        CubeState::solved()
    }
}

impl fmt::Display for CubeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.facelets {
            write!(f, "{}", Face::ALL[c as usize].letter())?;
        }
        Ok(())
    }
}

impl fmt::Debug for CubeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CubeState({self})")
    }
}

/// Parses the 54-character facelet string (face order URFDLB, row-major).
/// Colour counts and centres are checked; reachability is not.
impl FromStr for CubeState {
    type Err = Error;

    fn from_str(s: &str) -> Result<CubeState> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != NUM_FACELETS {
            return Err(Error::Facelets(format!(
                "expected {NUM_FACELETS} characters, got {}",
                chars.len()
            )));
        }
        let mut facelets = [0u8; NUM_FACELETS];
        for (i, (&c, slot)) in chars.iter().zip(facelets.iter_mut()).enumerate() {
            let face = Face::from_letter(c)
                .ok_or_else(|| Error::Facelets(format!("unknown colour {c:?} at index {i}")))?;
            *slot = face as u8;
        }
        CubeState::validate_codes(&facelets).map_err(Error::Facelets)?;
        Ok(CubeState { facelets })
    }
}

/// Canonical 124-bit key: the 48 non-centre facelets packed base 6 into a
/// `u128`, first facelet most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(pub u128);

/// 6^48, one past the largest valid key.
const KEY_LIMIT: u128 = {
    let mut v: u128 = 1;
    let mut i = 0;
    while i < 48 {
        v *= 6;
        i += 1;
    }
    v
};

const fn is_center(i: usize) -> bool {
    i % 9 == 4
}

pub fn encode_state(g: &CubeState) -> StateKey {
    let mut acc: u128 = 0;
    for (i, &c) in g.facelets.iter().enumerate() {
        if !is_center(i) {
            acc = acc * 6 + c as u128;
        }
    }
    StateKey(acc)
}

/// Inverse of [`encode_state`]. Rejects out-of-range keys and keys whose
/// colour counts are wrong; group reachability is not verified.
pub fn decode_state(key: StateKey) -> Result<CubeState> {
    if key.0 >= KEY_LIMIT {
        return Err(Error::StateKey(format!(
            "key {:#x} has more than 48 base-6 digits",
            key.0
        )));
    }
    let facelets = decode_unchecked(key);
    CubeState::validate_codes(&facelets).map_err(Error::StateKey)?;
    Ok(CubeState { facelets })
}

fn decode_unchecked(key: StateKey) -> [u8; NUM_FACELETS] {
    let mut facelets = SOLVED;
    let mut acc = key.0;
    for i in (0..NUM_FACELETS).rev() {
        if !is_center(i) {
            facelets[i] = (acc % 6) as u8;
            acc /= 6;
        }
    }
    facelets
}

impl StateKey {
    /// Decodes a key produced by [`encode_state`] without re-validating it.
    pub(crate) fn state(self) -> CubeState {
        debug_assert!(self.0 < KEY_LIMIT);
        CubeState {
            facelets: decode_unchecked(self),
        }
    }
}
