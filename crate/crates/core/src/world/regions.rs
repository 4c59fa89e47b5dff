use super::Config;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Left,
    Right,
    Top,
    Bottom,
    Corner,
    Middle,
}

impl Region {
    pub const ALL: [Region; 6] = [
        Region::Left,
        Region::Right,
        Region::Top,
        Region::Bottom,
        Region::Corner,
        Region::Middle,
    ];

    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Left => "Left",
            Region::Right => "Right",
            Region::Top => "Top",
            Region::Bottom => "Bottom",
            Region::Corner => "Corner",
            Region::Middle => "Middle",
        }
    }

    pub fn parse(s: &str) -> Option<Region> {
        Region::ALL.into_iter().find(|r| r.name() == s)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Region::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown region {s}")))
    }
}

/// A set of region tags as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionSet(pub u8);

impl RegionSet {
    pub const EMPTY: RegionSet = RegionSet(0);
    pub const FULL: RegionSet = RegionSet(0b11_1111);

    pub fn of(regions: &[Region]) -> RegionSet {
        RegionSet(regions.iter().fold(0, |m, r| m | r.bit()))
    }

    pub fn single(r: Region) -> RegionSet {
        RegionSet(r.bit())
    }

    pub fn contains(self, r: Region) -> bool {
        self.0 & r.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, o: RegionSet) -> RegionSet {
        RegionSet(self.0 | o.0)
    }

    pub fn intersect(self, o: RegionSet) -> RegionSet {
        RegionSet(self.0 & o.0)
    }

    pub fn minus(self, o: RegionSet) -> RegionSet {
        RegionSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: RegionSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Region> {
        Region::ALL.into_iter().filter(move |r| self.contains(*r))
    }

    /// Whether some open cell of the workspace lies in every region of the set.
    pub fn satisfiable(self) -> bool {
        realizable(self, RegionSet::EMPTY)
    }

    /// Goal-language legality: non-empty, satisfiable, and `Middle` only on its own.
    pub fn legal_goal(self) -> bool {
        !self.is_empty()
            && self.satisfiable()
            && (!self.contains(Region::Middle) || self.len() == 1)
    }
}

impl fmt::Display for RegionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Region::name).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

impl Serialize for RegionSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Region> = self.iter().collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RegionSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<Region>::deserialize(d)?;
        Ok(RegionSet::of(&v))
    }
}

/// The twelve open cells of the region partition: four quadrants, each plain, with its
/// corner disc, or with its quarter of the middle disc.
pub const CELLS: [RegionSet; 12] = {
    const L: u8 = 1;
    const R: u8 = 2;
    const T: u8 = 4;
    const B: u8 = 8;
    const C: u8 = 16;
    const M: u8 = 32;
    [
        RegionSet(L | T),
        RegionSet(L | B),
        RegionSet(R | T),
        RegionSet(R | B),
        RegionSet(L | T | C),
        RegionSet(L | B | C),
        RegionSet(R | T | C),
        RegionSet(R | B | C),
        RegionSet(L | T | M),
        RegionSet(L | B | M),
        RegionSet(R | T | M),
        RegionSet(R | B | M),
    ]
};

/// Whether some open cell contains every region of `incl` and none of `excl`.
pub fn realizable(incl: RegionSet, excl: RegionSet) -> bool {
    if !incl.intersect(excl).is_empty() {
        return false;
    }
    CELLS
        .iter()
        .any(|c| incl.is_subset(*c) && c.intersect(excl).is_empty())
}

pub(crate) fn classify(cfg: &Config, x: f64, y: f64) -> RegionSet {
    let mut m = 0u8;
    if x < 0.5 {
        m |= Region::Left.bit();
    }
    if x > 0.5 {
        m |= Region::Right.bit();
    }
    if y > 0.5 {
        m |= Region::Top.bit();
    }
    if y < 0.5 {
        m |= Region::Bottom.bit();
    }
    let rc2 = cfg.r_corner * cfg.r_corner;
    let near_corner = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        .iter()
        .any(|&(cx, cy)| (x - cx).powi(2) + (y - cy).powi(2) <= rc2);
    if near_corner {
        m |= Region::Corner.bit();
    }
    if (x - 0.5).powi(2) + (y - 0.5).powi(2) <= cfg.r_middle * cfg.r_middle {
        m |= Region::Middle.bit();
    }
    RegionSet(m)
}

/// Axis-aligned boxes whose union contains every centroid satisfying `incl`, each paired with
/// its area. Sampling a box proportionally to area and rejecting outside the region is uniform.
pub fn sampling_boxes(cfg: &Config, incl: RegionSet) -> Vec<[f64; 4]> {
    let (mut x0, mut x1, mut y0, mut y1): (f64, f64, f64, f64) = (0.0, 1.0, 0.0, 1.0);
    if incl.contains(Region::Left) {
        x1 = 0.5;
    }
    if incl.contains(Region::Right) {
        x0 = 0.5;
    }
    if incl.contains(Region::Bottom) {
        y1 = 0.5;
    }
    if incl.contains(Region::Top) {
        y0 = 0.5;
    }
    if incl.contains(Region::Middle) {
        let r = cfg.r_middle;
        x0 = x0.max(0.5 - r);
        x1 = x1.min(0.5 + r);
        y0 = y0.max(0.5 - r);
        y1 = y1.min(0.5 + r);
    }
    if incl.contains(Region::Corner) {
        let r = cfg.r_corner;
        let mut out = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            let b = [
                x0.max(cx - r),
                x1.min(cx + r),
                y0.max(cy - r),
                y1.min(cy + r),
            ];
            if b[0] < b[1] && b[2] < b[3] {
                out.push(b);
            }
        }
        return out;
    }
    if x0 < x1 && y0 < y1 {
        vec![[x0, x1, y0, y1]]
    } else {
        Vec::new()
    }
}
