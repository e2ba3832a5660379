//! Entity salience features and the extra input vector of the pair network.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Entity, MentionKind, Position};
use crate::error::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SalienceFeatures {
    /// Sentence of the first mention.
    pub first_loc: u32,
    /// Mentions whose head lemma is the entity's representative lemma.
    pub head_count: u32,
    pub named: u32,
    pub nominal: u32,
    pub pronominal: u32,
    pub total: u32,
}

pub fn extract_salience(entity: &Entity) -> SalienceFeatures {
    let mut f = SalienceFeatures {
        first_loc: u32::MAX,
        ..Default::default()
    };
    for m in entity.mentions() {
        f.first_loc = f.first_loc.min(m.sentence_index as u32);
        if m.head_lemma == entity.representative() {
            f.head_count += 1;
        }
        match m.kind {
            MentionKind::Named => f.named += 1,
            MentionKind::Nominal => f.nominal += 1,
            MentionKind::Pronominal => f.pronominal += 1,
        }
        f.total += 1;
    }
    f
}

/// A salience feature group that can be ablated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SalienceGroup {
    FirstLoc,
    HeadCount,
    Mentions,
}

impl SalienceGroup {
    pub const ALL: [SalienceGroup; 3] = [SalienceGroup::Mentions, SalienceGroup::HeadCount, SalienceGroup::FirstLoc];

    pub fn name(self) -> &'static str {
        match self {
            SalienceGroup::FirstLoc => "1st_loc",
            SalienceGroup::HeadCount => "head_count",
            SalienceGroup::Mentions => "mentions",
        }
    }

    pub fn width(self) -> usize {
        match self {
            SalienceGroup::Mentions => 4,
            _ => 1,
        }
    }
}

impl FromStr for SalienceGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1st_loc" | "first_loc" => Ok(SalienceGroup::FirstLoc),
            "head_count" => Ok(SalienceGroup::HeadCount),
            "mentions" => Ok(SalienceGroup::Mentions),
            other => Err(Error::Config(format!("unknown salience group `{other}`"))),
        }
    }
}

/// Which salience groups feed the pair network. Ablated groups are removed
/// from the input entirely, so the network is built narrower.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SalienceMask {
    pub first_loc: bool,
    pub head_count: bool,
    pub mentions: bool,
}

impl Default for SalienceMask {
    fn default() -> Self {
        SalienceMask::all()
    }
}

impl SalienceMask {
    pub fn all() -> SalienceMask {
        SalienceMask {
            first_loc: true,
            head_count: true,
            mentions: true,
        }
    }

    pub fn none() -> SalienceMask {
        SalienceMask {
            first_loc: false,
            head_count: false,
            mentions: false,
        }
    }

    pub fn includes(&self, group: SalienceGroup) -> bool {
        match group {
            SalienceGroup::FirstLoc => self.first_loc,
            SalienceGroup::HeadCount => self.head_count,
            SalienceGroup::Mentions => self.mentions,
        }
    }

    pub fn without(mut self, group: SalienceGroup) -> SalienceMask {
        match group {
            SalienceGroup::FirstLoc => self.first_loc = false,
            SalienceGroup::HeadCount => self.head_count = false,
            SalienceGroup::Mentions => self.mentions = false,
        }
        self
    }

    /// Parses an ablation list such as `head_count,1st_loc`.
    pub fn ablating(list: &str) -> Result<SalienceMask, Error> {
        let mut mask = SalienceMask::all();
        for part in list.split(',').filter(|p| !p.trim().is_empty()) {
            if part.trim() == "all" {
                return Ok(SalienceMask::none());
            }
            mask = mask.without(part.parse()?);
        }
        Ok(mask)
    }

    pub fn salience_width(&self) -> usize {
        SalienceGroup::ALL
            .iter()
            .filter(|g| self.includes(**g))
            .map(|g| g.width())
            .sum()
    }

    /// Width of the extra input: position one-hot plus retained salience.
    pub fn extra_width(&self) -> usize {
        3 + self.salience_width()
    }
}

impl fmt::Display for SalienceMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ablated: Vec<&str> = SalienceGroup::ALL
            .iter()
            .filter(|g| !self.includes(**g))
            .map(|g| g.name())
            .collect();
        if ablated.is_empty() {
            f.write_str("none")
        } else {
            write!(f, "-{}", ablated.join(",-"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtraFeatureVector {
    pub position_onehot: [f64; 3],
    /// first_loc, head_count, named, nominal, pronominal, total
    pub salience_encoded: [f64; 6],
}

impl ExtraFeatureVector {
    /// Masked input layout: one-hot, then 1st_loc, head_count, mentions.
    pub fn to_input(&self, mask: &SalienceMask) -> Vec<f64> {
        let mut v = self.position_onehot.to_vec();
        if mask.first_loc {
            v.push(self.salience_encoded[0]);
        }
        if mask.head_count {
            v.push(self.salience_encoded[1]);
        }
        if mask.mentions {
            v.extend_from_slice(&self.salience_encoded[2..6]);
        }
        v
    }
}

/// Counts become `ln(1 + x)`, the first-mention sentence `1 / (1 + loc)`;
/// `raw` passes values through unchanged.
pub fn encode_extra_features(position: Position, feats: &SalienceFeatures, raw: bool) -> ExtraFeatureVector {
    let mut onehot = [0.0; 3];
    onehot[position.index()] = 1.0;
    let count = |x: u32| if raw { x as f64 } else { (x as f64).ln_1p() };
    let loc = if raw {
        feats.first_loc as f64
    } else {
        1.0 / (1.0 + feats.first_loc as f64)
    };
    ExtraFeatureVector {
        position_onehot: onehot,
        salience_encoded: [
            loc,
            count(feats.head_count),
            count(feats.named),
            count(feats.nominal),
            count(feats.pronominal),
            count(feats.total),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Mention;

    fn mention(sent: usize, lemma: &str, kind: MentionKind) -> Mention {
        Mention {
            sentence_index: sent,
            head_lemma: lemma.into(),
            kind,
        }
    }

    #[test]
    fn counts_by_kind() {
        let e = Entity::new(
            0,
            vec![mention(0, "ebola", MentionKind::Named), mention(3, "it", MentionKind::Pronominal)],
        )
        .unwrap();
        let f = extract_salience(&e);
        assert_eq!(f.first_loc, 0);
        assert_eq!(f.head_count, 1);
        assert_eq!((f.named, f.nominal, f.pronominal, f.total), (1, 0, 1, 2));

        let p = Entity::new(1, vec![mention(4, "plant", MentionKind::Nominal), mention(2, "plant", MentionKind::Nominal)]).unwrap();
        let f = extract_salience(&p);
        assert_eq!(f.head_count, 2);
        assert_eq!(f.first_loc, 2);
        assert_eq!((f.named, f.nominal, f.pronominal, f.total), (0, 2, 0, 2));
    }

    #[test]
    fn encoding_values() {
        let mut f = SalienceFeatures {
            total: 2,
            ..Default::default()
        };
        let x = encode_extra_features(Position::Subj, &f, false);
        assert_eq!(x.position_onehot, [1.0, 0.0, 0.0]);
        assert_eq!(x.salience_encoded[0], 1.0);
        assert_eq!(x.salience_encoded[1], 0.0);
        f.first_loc = 9;
        let x = encode_extra_features(Position::Pobj, &f, false);
        assert!((x.salience_encoded[0] - 0.1).abs() < 1e-15);
        assert_eq!(x.position_onehot, [0.0, 0.0, 1.0]);
        let raw = encode_extra_features(Position::Dobj, &f, true);
        assert_eq!(raw.salience_encoded[0], 9.0);
        assert_eq!(raw.salience_encoded[5], 2.0);
    }

    #[test]
    fn mask_widths_follow_ablation() {
        assert_eq!(SalienceMask::all().extra_width(), 9);
        assert_eq!(SalienceMask::ablating("mentions").unwrap().extra_width(), 5);
        assert_eq!(SalienceMask::ablating("head_count").unwrap().extra_width(), 8);
        assert_eq!(SalienceMask::ablating("1st_loc").unwrap().extra_width(), 8);
        assert_eq!(SalienceMask::ablating("head_count,1st_loc").unwrap().extra_width(), 7);
        assert_eq!(SalienceMask::ablating("all").unwrap().extra_width(), 3);
        assert!(SalienceMask::ablating("bogus").is_err());
        let x = encode_extra_features(Position::Dobj, &SalienceFeatures::default(), false);
        for mask in [SalienceMask::all(), SalienceMask::ablating("mentions").unwrap(), SalienceMask::none()] {
            assert_eq!(x.to_input(&mask).len(), mask.extra_width());
        }
    }
}
