use std::collections::{HashMap, HashSet};

use super::{EntityMention, MentionSource};

/// Food voting: a common-name dictionary mention survives only when some
/// BuTTER mention overlaps it; scientific-name mentions always survive.
/// Survivors keep the dictionary span and links, are marked
/// [`MentionSource::Voted`], and are deduplicated by `(sent_id, start, end)`.
pub fn food_vote(
    butter: &[EntityMention],
    common: &[EntityMention],
    scientific: &[EntityMention],
) -> Vec<EntityMention> {
    let mut by_sent: HashMap<&str, Vec<&EntityMention>> = HashMap::new();
    for b in butter {
        by_sent.entry(b.sent_id.as_str()).or_default().push(b);
    }
    let confirmed = common.iter().filter(|c| {
        by_sent
            .get(c.sent_id.as_str())
            .is_some_and(|bs| bs.iter().any(|b| b.overlaps(c)))
    });
    let mut seen = HashSet::new();
    let mut out: Vec<EntityMention> = confirmed
        .chain(scientific.iter())
        .filter(|m| seen.insert((m.sent_id.clone(), m.start, m.end)))
        .map(|m| EntityMention {
            source: MentionSource::Voted,
            ..m.clone()
        })
        .collect();
    out.sort_by(|a, b| (a.sent_id.as_str(), a.start, a.end).cmp(&(b.sent_id.as_str(), b.start, b.end)));
    out
}
