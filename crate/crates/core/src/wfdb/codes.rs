//! MIT annotation codes and the eight-class beat mapping.

use std::fmt;
use std::str::FromStr;

// Annotation codes from the WFDB registry (ecgcodes.h).
pub const NOTQRS: u8 = 0;
pub const NORMAL: u8 = 1;
pub const LBBB: u8 = 2;
pub const RBBB: u8 = 3;
pub const ABERR: u8 = 4;
pub const PVC: u8 = 5;
pub const FUSION: u8 = 6;
pub const NPC: u8 = 7;
pub const APC: u8 = 8;
pub const SVPB: u8 = 9;
pub const VESC: u8 = 10;
pub const NESC: u8 = 11;
pub const PACE: u8 = 12;
pub const UNKNOWN: u8 = 13;
pub const NOISE: u8 = 14;
pub const ARFCT: u8 = 16;
pub const RHYTHM: u8 = 28;
/// Ventricular flutter wave (`!`).
pub const FLWAV: u8 = 31;
pub const AESC: u8 = 34;
pub const SVESC: u8 = 35;
pub const NAPC: u8 = 37;
pub const PFUS: u8 = 38;

/// Largest code that can appear as an annotation type (6-bit field, 59.. are escapes).
pub const ACMAX: u8 = 49;

const SYMBOLS: [(u8, &str); 41] = [
    (0, " "),
    (1, "N"),
    (2, "L"),
    (3, "R"),
    (4, "a"),
    (5, "V"),
    (6, "F"),
    (7, "J"),
    (8, "A"),
    (9, "S"),
    (10, "E"),
    (11, "j"),
    (12, "/"),
    (13, "Q"),
    (14, "~"),
    (15, "[15]"),
    (16, "|"),
    (17, "[17]"),
    (18, "s"),
    (19, "T"),
    (20, "*"),
    (21, "D"),
    (22, "\""),
    (23, "="),
    (24, "p"),
    (25, "B"),
    (26, "^"),
    (27, "t"),
    (28, "+"),
    (29, "u"),
    (30, "?"),
    (31, "!"),
    (32, "["),
    (33, "]"),
    (34, "e"),
    (35, "n"),
    (36, "@"),
    (37, "x"),
    (38, "f"),
    (39, "("),
    (40, ")"),
];

/// Printable mnemonic for an annotation code (`N`, `V`, `!`, ...).
pub fn symbol(code: u8) -> &'static str {
    SYMBOLS.iter().find(|(c, _)| *c == code).map(|(_, s)| *s).unwrap_or("?")
}

/// The eight beat classes, in their stable integer order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BeatClass {
    Nor = 0,
    Vfw = 1,
    Pvc = 2,
    Veb = 3,
    Rbb = 4,
    Lbb = 5,
    Pab = 6,
    Apc = 7,
}

impl BeatClass {
    pub const COUNT: usize = 8;

    pub const ALL: [BeatClass; 8] = [
        BeatClass::Nor,
        BeatClass::Vfw,
        BeatClass::Pvc,
        BeatClass::Veb,
        BeatClass::Rbb,
        BeatClass::Lbb,
        BeatClass::Pab,
        BeatClass::Apc,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<BeatClass> {
        Self::ALL.get(i).copied()
    }

    pub fn acronym(self) -> &'static str {
        match self {
            BeatClass::Nor => "NOR",
            BeatClass::Vfw => "VFW",
            BeatClass::Pvc => "PVC",
            BeatClass::Veb => "VEB",
            BeatClass::Rbb => "RBB",
            BeatClass::Lbb => "LBB",
            BeatClass::Pab => "PAB",
            BeatClass::Apc => "APC",
        }
    }

    /// Annotation code this class is read from.
    pub fn annotation_code(self) -> u8 {
        match self {
            BeatClass::Nor => NORMAL,
            BeatClass::Vfw => FLWAV,
            BeatClass::Pvc => PVC,
            BeatClass::Veb => VESC,
            BeatClass::Rbb => RBBB,
            BeatClass::Lbb => LBBB,
            BeatClass::Pab => PACE,
            BeatClass::Apc => APC,
        }
    }
}

impl fmt::Display for BeatClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.acronym())
    }
}

impl FromStr for BeatClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BeatClass::ALL
            .iter()
            .copied()
            .find(|c| c.acronym().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown beat class `{s}`"))
    }
}

/// Maps an annotation code onto one of the eight classes; everything else is excluded.
pub fn map_symbol(code: u8) -> Option<BeatClass> {
    match code {
        NORMAL => Some(BeatClass::Nor),
        LBBB => Some(BeatClass::Lbb),
        RBBB => Some(BeatClass::Rbb),
        APC => Some(BeatClass::Apc),
        PVC => Some(BeatClass::Pvc),
        PACE => Some(BeatClass::Pab),
        FLWAV => Some(BeatClass::Vfw),
        VESC => Some(BeatClass::Veb),
        _ => None,
    }
}
