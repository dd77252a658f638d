//! Active-term prediction: which Φ_j attains the minimum, read off the case
//! analysis (exponent layout, n-regime, and band of ν1/ν2) rather than by
//! comparing the five values.
//!
//! Only the "a" variants with one fixed ball order are tabulated. Every other
//! query is brought to a tabulated one by transposing (rows ↔ columns, which
//! swaps `(m,q,p)` with `(k,σ,θ)` and Φ3 with Φ4) and/or swapping the balls
//! (which swaps Φ1 with Φ2).

use serde::Serialize;

use super::phi::{Frame, WidthQuery};
use super::theorem_a::lambda_recip;
use crate::error::Result;

const EXP_TOL: f64 = 1e-12;
const REGIME_TOL: f64 = 1e-12;
/// Relative closeness of ν1/ν2 to a band endpoint that counts as a boundary.
pub const BAND_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CaseId {
    #[serde(rename = "1")]
    C1,
    #[serde(rename = "2a")]
    C2a,
    #[serde(rename = "2b")]
    C2b,
    #[serde(rename = "3")]
    C3,
    #[serde(rename = "4a")]
    C4a,
    #[serde(rename = "4b")]
    C4b,
    #[serde(rename = "5a")]
    C5a,
    #[serde(rename = "5b")]
    C5b,
    #[serde(rename = "6a")]
    C6a,
    #[serde(rename = "6b")]
    C6b,
    #[serde(rename = "7a")]
    C7a,
    #[serde(rename = "7b")]
    C7b,
    #[serde(rename = "8a")]
    C8a,
    #[serde(rename = "8b")]
    C8b,
    #[serde(rename = "9a")]
    C9a,
    #[serde(rename = "9b")]
    C9b,
    #[serde(rename = "10")]
    C10,
    #[serde(rename = "11")]
    C11,
}

impl CaseId {
    pub const ALL: [CaseId; 18] = [
        CaseId::C1,
        CaseId::C2a,
        CaseId::C2b,
        CaseId::C3,
        CaseId::C4a,
        CaseId::C4b,
        CaseId::C5a,
        CaseId::C5b,
        CaseId::C6a,
        CaseId::C6b,
        CaseId::C7a,
        CaseId::C7b,
        CaseId::C8a,
        CaseId::C8b,
        CaseId::C9a,
        CaseId::C9b,
        CaseId::C10,
        CaseId::C11,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CaseId::C1 => "1",
            CaseId::C2a => "2a",
            CaseId::C2b => "2b",
            CaseId::C3 => "3",
            CaseId::C4a => "4a",
            CaseId::C4b => "4b",
            CaseId::C5a => "5a",
            CaseId::C5b => "5b",
            CaseId::C6a => "6a",
            CaseId::C6b => "6b",
            CaseId::C7a => "7a",
            CaseId::C7b => "7b",
            CaseId::C8a => "8a",
            CaseId::C8b => "8b",
            CaseId::C9a => "9a",
            CaseId::C9b => "9b",
            CaseId::C10 => "10",
            CaseId::C11 => "11",
        }
    }

    /// The tabulated variant this case is reduced to by transposition.
    fn tabulated(self) -> CaseId {
        match self {
            CaseId::C2b => CaseId::C2a,
            CaseId::C4b => CaseId::C4a,
            CaseId::C5b => CaseId::C5a,
            CaseId::C6b => CaseId::C6a,
            CaseId::C7b => CaseId::C7a,
            CaseId::C8b => CaseId::C8a,
            CaseId::C9b => CaseId::C9a,
            c => c,
        }
    }
}

/// n-regime relative to `A = m^{2/q}k^{2/σ}`, `B = mk^{2/σ}`, `C = km^{2/q}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcase {
    /// n ≤ A
    FirstRegime,
    /// n > A (cases whose formulas do not split further)
    AboveLower,
    /// A < n ≤ B
    BelowRowsFull,
    /// n > B
    AboveRowsFull,
    /// A < n ≤ min(B, C)
    Central,
    /// C < n ≤ B
    ColsBeforeRows,
    /// B < n ≤ C
    RowsBeforeCols,
    /// n > max(B, C)
    Upper,
}

impl Subcase {
    pub fn label(self) -> &'static str {
        match self {
            Subcase::FirstRegime => "n<=m^(2/q)k^(2/sigma)",
            Subcase::AboveLower => "n>m^(2/q)k^(2/sigma)",
            Subcase::BelowRowsFull => "m^(2/q)k^(2/sigma)<n<=mk^(2/sigma)",
            Subcase::AboveRowsFull => "n>mk^(2/sigma)",
            Subcase::Central => "m^(2/q)k^(2/sigma)<n<=min(mk^(2/sigma),km^(2/q))",
            Subcase::ColsBeforeRows => "km^(2/q)<n<=mk^(2/sigma)",
            Subcase::RowsBeforeCols => "mk^(2/sigma)<n<=km^(2/q)",
            Subcase::Upper => "n>max(mk^(2/sigma),km^(2/q))",
        }
    }
}

/// Band endpoints for ν1/ν2. With `t = n^{1/2}m^{-1/q}k^{-1/σ}`,
/// `t_m = n^{1/2}m^{-1/2}k^{-1/σ}`, `t_k = n^{1/2}m^{-1/q}k^{-1/2}`,
/// `dp = 1/p1-1/p2`, `dt = 1/θ1-1/θ2`, `a = 1/2-1/q`, `b = 1/2-1/σ`:
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Breakpoint {
    /// 1
    One,
    /// `t^{dp/a}`
    Tp,
    /// `t^{dt/b}`
    Tt,
    /// `m^{dp}`
    Mp,
    /// `k^{dt}`
    Kt,
    /// `m^{dp} t_m^{dt/b}`
    Um,
    /// `k^{dt} t_k^{dp/a}`
    Uk,
}

impl Breakpoint {
    pub(crate) fn log_value(self, f: &Frame) -> f64 {
        let g = &f.g;
        let (lm, lk, ln) = (g.m.ln(), g.k.ln(), g.n.ln());
        let dp = f.e[0].p.recip() - f.e[1].p.recip();
        let dt = f.e[0].theta.recip() - f.e[1].theta.recip();
        let a = 0.5 - g.rq;
        let b = 0.5 - g.rs;
        let ratio = |x: f64, d: f64| if x == 0.0 { 0.0 } else { x / d };
        let lt = 0.5 * ln - g.rq * lm - g.rs * lk;
        let ltm = 0.5 * ln - 0.5 * lm - g.rs * lk;
        let ltk = 0.5 * ln - g.rq * lm - 0.5 * lk;
        match self {
            Breakpoint::One => 0.0,
            Breakpoint::Tp => lt * ratio(dp, a),
            Breakpoint::Tt => lt * ratio(dt, b),
            Breakpoint::Mp => dp * lm,
            Breakpoint::Kt => dt * lk,
            Breakpoint::Um => dp * lm + ltm * ratio(dt, b),
            Breakpoint::Uk => dt * lk + ltk * ratio(dp, a),
        }
    }
}

/// Lower-bound constructions; each has a first assertion written out and a
/// second obtained by transposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    /// `min{ν1,ν2}·V_{1,1}`
    SingleEntry,
    /// `ν1 r^{-1/p1} V_{r,1}` with `r = ⌈t^{1/a}⌉`
    CeilBlock,
    /// `ν1 m^{-1/p1} l^{-1/θ1} V_{m,l}` with `l = ⌈t_m^{1/b}⌉`
    FullSideCeilBlock,
    /// interpolated `V_{r,l}` with `r̃ = t^{(1-α)/a}`, `l̃ = t^{α/b}`
    Central,
    /// interpolated `V_{r,l}` with `r̃ = t^{(1-α)/a} t_k^{α/a}`, `l̃ = k^α`
    Transition,
    /// interpolated `V_{r,l}` with `r̃ = m^{1-α} t_k^{α/a}`, `l̃ = t_m^{(1-α)/b} k^α`
    Upper,
    /// `ν2 m^{-1/p2} V_{m,1}`
    FullSideLine,
    /// `V_{m,l}` with `l = ⌊t_m^{(1-α)/b}⌋`, interpolated at `μ̃`
    FullSideTildeInterp,
    /// `V_{r,1}` with `r = ⌊t^{α/a}⌋`, interpolated at `λ̃`
    TildeInterpLow,
    /// `V_{r,1}` with `r = ⌊m^α⌋`, interpolated at `λ̃`
    TildeInterpHigh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LemmaRef {
    pub lemma: LemmaId,
    /// 1 as written, 2 for the transposed assertion.
    pub assertion: u8,
    /// Ball indices exchanged.
    pub swapped: bool,
}

const fn lr(lemma: LemmaId, assertion: u8, swapped: bool) -> LemmaRef {
    LemmaRef { lemma, assertion, swapped }
}

#[derive(Clone, Copy, Debug)]
struct Band {
    upper: Option<Breakpoint>,
    j: usize,
    lemma: LemmaRef,
}

const fn band(upper: Option<Breakpoint>, j: usize, lemma: LemmaRef) -> Band {
    Band { upper, j, lemma }
}

use Breakpoint::*;
use LemmaId::*;

const SE: LemmaRef = lr(SingleEntry, 1, false);

fn table(case: CaseId, sub: Subcase) -> Vec<Band> {
    use CaseId::*;
    use Subcase::*;
    let b = band;
    match (case, sub) {
        (_, FirstRegime) | (C1, _) => vec![b(Some(One), 1, SE), b(None, 2, SE)],
        (C2a, BelowRowsFull) | (C4a, BelowRowsFull) | (C9a, BelowRowsFull) => vec![
            b(Some(Tp), 1, lr(CeilBlock, 1, false)),
            b(None, 2, lr(CeilBlock, 1, true)),
        ],
        (C2a, AboveRowsFull) => vec![
            b(Some(Um), 1, lr(FullSideCeilBlock, 1, false)),
            b(None, 2, lr(FullSideCeilBlock, 1, true)),
        ],
        (C3, Central) | (C10, Central) => vec![
            b(Some(Tp), 1, lr(CeilBlock, 1, false)),
            b(Some(Tt), 5, lr(LemmaId::Central, 1, false)),
            b(None, 2, lr(CeilBlock, 2, true)),
        ],
        (C3, ColsBeforeRows) => vec![
            b(Some(Tp), 1, lr(CeilBlock, 1, false)),
            b(Some(Uk), 5, lr(Transition, 1, false)),
            b(None, 2, lr(FullSideCeilBlock, 2, true)),
        ],
        (C3, Upper) => vec![
            b(Some(Um), 1, lr(FullSideCeilBlock, 1, false)),
            b(Some(Uk), 5, lr(LemmaId::Upper, 1, false)),
            b(None, 2, lr(FullSideCeilBlock, 2, true)),
        ],
        (C4a, AboveRowsFull) => vec![
            b(Some(Um), 1, lr(FullSideCeilBlock, 1, false)),
            b(Some(Mp), 4, lr(FullSideTildeInterp, 1, false)),
            b(None, 2, lr(FullSideLine, 1, false)),
        ],
        (C5a, Central) => vec![
            b(Some(Tt), 1, lr(CeilBlock, 2, false)),
            b(Some(Tp), 5, lr(LemmaId::Central, 1, false)),
            b(None, 2, lr(CeilBlock, 1, true)),
        ],
        (C5a, RowsBeforeCols) => vec![
            b(Some(Tt), 1, lr(CeilBlock, 2, false)),
            b(Some(Um), 5, lr(Transition, 2, false)),
            b(Some(Mp), 4, lr(FullSideTildeInterp, 1, false)),
            b(None, 2, lr(FullSideLine, 1, false)),
        ],
        (C5a, ColsBeforeRows) => vec![
            b(Some(Uk), 1, lr(FullSideCeilBlock, 2, false)),
            b(Some(Tp), 5, lr(Transition, 1, false)),
            b(None, 2, lr(CeilBlock, 1, true)),
        ],
        (C5a, Upper) => vec![
            b(Some(Uk), 1, lr(FullSideCeilBlock, 2, false)),
            b(Some(Um), 5, lr(LemmaId::Upper, 1, false)),
            b(Some(Mp), 4, lr(FullSideTildeInterp, 1, false)),
            b(None, 2, lr(FullSideLine, 1, false)),
        ],
        (C6a, BelowRowsFull) => vec![
            b(Some(One), 1, SE),
            b(Some(Tp), 3, lr(TildeInterpLow, 1, false)),
            b(None, 2, lr(CeilBlock, 1, true)),
        ],
        (C6a, AboveRowsFull) => vec![
            b(Some(One), 1, SE),
            b(Some(Mp), 3, lr(TildeInterpHigh, 1, false)),
            b(None, 2, lr(FullSideLine, 1, false)),
        ],
        (C7a, Central) => vec![
            b(Some(Tp), 1, lr(CeilBlock, 1, false)),
            b(Some(Tt), 5, lr(LemmaId::Central, 1, false)),
            b(Some(One), 4, lr(TildeInterpLow, 2, false)),
            b(None, 2, SE),
        ],
        (C7a, RowsBeforeCols) => vec![
            b(Some(Um), 1, lr(FullSideCeilBlock, 1, false)),
            b(Some(Tt), 5, lr(Transition, 2, false)),
            b(Some(One), 4, lr(TildeInterpLow, 2, false)),
            b(None, 2, SE),
        ],
        (C7a, ColsBeforeRows) => vec![
            b(Some(Tp), 1, lr(CeilBlock, 1, false)),
            b(Some(Uk), 5, lr(Transition, 1, false)),
            b(Some(Kt), 3, lr(FullSideTildeInterp, 2, false)),
            b(Some(One), 4, lr(TildeInterpHigh, 2, false)),
            b(None, 2, SE),
        ],
        (C7a, Upper) => vec![
            b(Some(Um), 1, lr(FullSideCeilBlock, 1, false)),
            b(Some(Uk), 5, lr(LemmaId::Upper, 1, false)),
            b(Some(Kt), 3, lr(FullSideTildeInterp, 2, false)),
            b(Some(One), 4, lr(TildeInterpHigh, 2, false)),
            b(None, 2, SE),
        ],
        (C8a, BelowRowsFull) => vec![
            b(Some(Tp), 1, lr(CeilBlock, 1, false)),
            b(Some(One), 3, lr(TildeInterpLow, 1, false)),
            b(None, 2, SE),
        ],
        (C8a, AboveRowsFull) => vec![
            b(Some(Um), 1, lr(FullSideCeilBlock, 1, false)),
            b(Some(Mp), 4, lr(FullSideTildeInterp, 1, false)),
            b(Some(One), 3, lr(TildeInterpHigh, 1, false)),
            b(None, 2, SE),
        ],
        (C9a, AboveRowsFull) => vec![
            b(Some(Mp), 1, lr(FullSideLine, 1, true)),
            b(None, 2, lr(FullSideLine, 1, false)),
        ],
        (C10, RowsBeforeCols) => vec![
            b(Some(Mp), 1, lr(FullSideLine, 1, true)),
            b(Some(Um), 4, lr(FullSideTildeInterp, 1, false)),
            b(Some(Tt), 5, lr(Transition, 2, false)),
            b(None, 2, lr(CeilBlock, 2, true)),
        ],
        (C10, Upper) => vec![
            b(Some(Mp), 1, lr(FullSideLine, 1, true)),
            b(Some(Um), 4, lr(FullSideTildeInterp, 1, false)),
            b(Some(Uk), 5, lr(LemmaId::Upper, 1, false)),
            b(Some(Kt), 3, lr(FullSideTildeInterp, 2, false)),
            b(None, 2, lr(FullSideLine, 2, false)),
        ],
        (C11, Central) => vec![
            b(Some(Tp), 1, lr(CeilBlock, 1, false)),
            b(Some(One), 3, lr(TildeInterpLow, 1, false)),
            b(Some(Tt), 4, lr(TildeInterpLow, 2, false)),
            b(None, 2, lr(CeilBlock, 2, true)),
        ],
        (C11, RowsBeforeCols) => vec![
            b(Some(Mp), 1, lr(FullSideLine, 1, true)),
            b(Some(One), 3, lr(TildeInterpHigh, 1, false)),
            b(Some(Tt), 4, lr(TildeInterpLow, 2, false)),
            b(None, 2, lr(CeilBlock, 2, true)),
        ],
        // Not written out in the source; derived by the same comparisons.
        (C11, Upper) => vec![
            b(Some(Mp), 1, lr(FullSideLine, 1, true)),
            b(Some(One), 3, lr(TildeInterpHigh, 1, false)),
            b(Some(Kt), 4, lr(TildeInterpHigh, 2, false)),
            b(None, 2, lr(FullSideLine, 2, false)),
        ],
        (c, s) => unreachable!("no table for case {} in regime {:?}", c.label(), s),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BallClass {
    LL,
    LH,
    HL,
    HH(i8),
}

fn exponent_classes(r: f64) -> &'static [bool] {
    if (r - 0.5).abs() <= EXP_TOL {
        &[false, true]
    } else if r < 0.5 {
        &[true]
    } else {
        &[false]
    }
}

fn hh_sign(f: &Frame, i: usize) -> i8 {
    let lp = lambda_recip(f.e[i].p.recip(), f.g.rq);
    let lt = lambda_recip(f.e[i].theta.recip(), f.g.rs);
    if (lp - lt).abs() <= EXP_TOL {
        0
    } else if lp < lt {
        -1
    } else {
        1
    }
}

fn ball_class(p_high: bool, t_high: bool, sign: i8) -> BallClass {
    match (p_high, t_high) {
        (false, false) => BallClass::LL,
        (false, true) => BallClass::LH,
        (true, false) => BallClass::HL,
        (true, true) => BallClass::HH(sign),
    }
}

/// `(case, transpose, swap, tie)` for one reading of the exponent classes.
fn classify(c: [BallClass; 2], f: &Frame) -> (CaseId, bool, bool, bool) {
    use BallClass::*;
    use CaseId::*;
    match c {
        [LL, LL] => (C1, false, false, false),
        [HH(s1), HH(s2)] => {
            let tie = s1 == 0 || s2 == 0;
            if s1 <= 0 && s2 <= 0 {
                (C2a, false, false, tie)
            } else if s1 >= 0 && s2 >= 0 {
                (C2b, true, false, tie)
            } else if s1 < 0 {
                (C3, false, false, false)
            } else {
                (C3, false, true, false)
            }
        }
        [HH(s), HL] | [HL, HH(s)] => {
            let sw = matches!(c[0], HL);
            (if s <= 0 { C4a } else { C5a }, false, sw, s == 0)
        }
        [HH(s), LH] | [LH, HH(s)] => {
            let sw = matches!(c[0], LH);
            (if s >= 0 { C4b } else { C5b }, true, sw, s == 0)
        }
        [LL, HL] => (C6a, false, false, false),
        [HL, LL] => (C6a, false, true, false),
        [LL, LH] => (C6b, true, false, false),
        [LH, LL] => (C6b, true, true, false),
        [HH(s), LL] | [LL, HH(s)] => {
            let sw = matches!(c[0], LL);
            let g = if sw { f.swap() } else { *f };
            let lt = g.lambda_tilde().map_or(0.0, |x| x.parameter);
            let mt = g.mu_tilde().map_or(0.0, |x| x.parameter);
            let cmp = if (mt - lt).abs() <= EXP_TOL { 0 } else if mt > lt { 1 } else { -1 };
            let tie = s == 0 || cmp == 0;
            let case = match (s, cmp) {
                (s, 1) if s <= 0 => C7a,
                (s, -1) if s >= 0 => C7b,
                (s, _) if s <= 0 => C8a,
                _ => C8b,
            };
            let t = matches!(case, C7b | C8b);
            (case, t, sw, tie)
        }
        [HL, HL] => (C9a, false, false, false),
        [LH, LH] => (C9b, true, false, false),
        [HL, LH] | [LH, HL] => {
            let sw = matches!(c[0], LH);
            let g = if sw { f.swap() } else { *f };
            let lt = g.lambda_tilde().map_or(0.0, |x| x.parameter);
            let mt = g.mu_tilde().map_or(0.0, |x| x.parameter);
            let tie = (lt - mt).abs() <= EXP_TOL;
            (if lt >= mt - EXP_TOL { C10 } else { C11 }, false, sw, tie)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    /// Predicted active index in the query's own numbering.
    pub j: usize,
    pub case: CaseId,
    pub subcase: Subcase,
    /// Band endpoints in the tabulated frame; `None` is 0 or +∞.
    pub band: (Option<Breakpoint>, Option<Breakpoint>),
    /// Lower-bound construction for this band, in the tabulated frame.
    pub lemma: LemmaRef,
    /// Transforms from the query to the tabulated frame.
    pub transposed: bool,
    pub swapped: bool,
    pub mirrored: bool,
    pub boundary: bool,
    /// Band endpoints as values of the query's own ν1/ν2, ascending in the
    /// tabulated frame.
    pub ratio_breakpoints: Vec<f64>,
    /// False when the tabulated endpoints are not in ascending order.
    pub ordered: bool,
    pub label: String,
}

fn subcase(case: CaseId, f: &Frame) -> (Subcase, bool) {
    let (la, lb, lc) = f.g.log_thresholds();
    let ln = if f.g.n > 0.0 { f.g.n.ln() } else { f64::NEG_INFINITY };
    let near = |x: f64| (ln - x).abs() <= REGIME_TOL * x.abs().max(1.0);
    if ln <= la {
        return (Subcase::FirstRegime, near(la));
    }
    let mut boundary = near(la);
    let sub = match case {
        CaseId::C1 => Subcase::AboveLower,
        CaseId::C2a | CaseId::C4a | CaseId::C6a | CaseId::C8a | CaseId::C9a => {
            boundary |= near(lb);
            if ln <= lb {
                Subcase::BelowRowsFull
            } else {
                Subcase::AboveRowsFull
            }
        }
        _ => {
            boundary |= near(lb) || near(lc);
            match (ln <= lb, ln <= lc) {
                (true, true) => Subcase::Central,
                (true, false) => Subcase::ColsBeforeRows,
                (false, true) => Subcase::RowsBeforeCols,
                (false, false) => Subcase::Upper,
            }
        }
    };
    (sub, boundary)
}

/// Case, transforms and tie flag for a frame; the lowest-numbered case wins
/// when an exponent sits exactly at 2.
fn case_of(f: &Frame) -> (CaseId, bool, bool, bool) {
    let opts: Vec<&[bool]> = (0..2)
        .flat_map(|i| [exponent_classes(f.e[i].p.recip()), exponent_classes(f.e[i].theta.recip())])
        .collect();
    let mut best: Option<(CaseId, bool, bool, bool)> = None;
    let mut count = 0;
    for &p1 in opts[0] {
        for &t1 in opts[1] {
            for &p2 in opts[2] {
                for &t2 in opts[3] {
                    count += 1;
                    let c = [
                        ball_class(p1, t1, if p1 && t1 { hh_sign(f, 0) } else { 0 }),
                        ball_class(p2, t2, if p2 && t2 { hh_sign(f, 1) } else { 0 }),
                    ];
                    let r = classify(c, f);
                    if best.is_none_or(|b| r.0 < b.0) {
                        best = Some(r);
                    }
                }
            }
        }
    }
    let (c, t, s, tie) = best.expect("at least one class reading");
    (c, t, s, tie || count > 1)
}

pub fn predict_active_term(query: &WidthQuery) -> Result<Prediction> {
    query.validate()?;
    query.require_two_balls()?;
    Ok(predict_frame(&Frame::from_query(query)))
}

pub(crate) fn predict_frame(orig: &Frame) -> Prediction {
    let (case, mut t, mut s, mut boundary) = case_of(orig);
    let tab = case.tabulated();
    let mut f = orig.apply(t, s);
    let (mut sub, b) = subcase(tab, &f);
    boundary |= b;
    // the remaining middle regime of 3, 10 and 11 is the transposed-and-swapped one
    if matches!(tab, CaseId::C3 | CaseId::C10 | CaseId::C11) {
        let other = if tab == CaseId::C3 { Subcase::RowsBeforeCols } else { Subcase::ColsBeforeRows };
        if sub == other {
            t = !t;
            s = !s;
            f = orig.apply(t, s);
            sub = subcase(tab, &f).0;
        }
    }
    let bands = table(tab, sub);
    let lrho = (f.nu[0] / f.nu[1]).ln();
    let logs: Vec<f64> = bands.iter().filter_map(|b| b.upper.map(|u| u.log_value(&f))).collect();
    let ordered = logs.windows(2).all(|w| w[0] <= w[1] + 1e-12 * w[1].abs().max(1.0));
    let idx = bands
        .iter()
        .position(|b| b.upper.is_none_or(|u| lrho <= u.log_value(&f)))
        .expect("last band is unbounded");
    let near = |x: f64| (lrho - x).abs() <= BAND_TOL * x.abs().max(1.0);
    if logs.iter().any(|&x| near(x)) {
        boundary = true;
    }
    let chosen = bands[idx];
    let mut j = chosen.j;
    if s {
        j = match j {
            1 => 2,
            2 => 1,
            x => x,
        };
    }
    if t {
        j = match j {
            3 => 4,
            4 => 3,
            x => x,
        };
    }
    let lower = if idx == 0 { None } else { bands[idx - 1].upper };
    let ratio_breakpoints = logs.iter().map(|&x| if s { (-x).exp() } else { x.exp() }).collect();
    let label = format!(
        "case {}{}, {}, band {}..{}",
        case.label(),
        if t || s { " (mirrored)" } else { "" },
        sub.label(),
        lower.map_or("0".to_string(), |b| format!("{b:?}")),
        chosen.upper.map_or("inf".to_string(), |b| format!("{b:?}")),
    );
    Prediction {
        j,
        case,
        subcase: sub,
        band: (lower, chosen.upper),
        lemma: chosen.lemma,
        transposed: t,
        swapped: s,
        mirrored: t || s,
        boundary,
        ratio_breakpoints,
        ordered,
        label,
    }
}
