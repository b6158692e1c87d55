use serde::{Serialize, Serializer};

use super::{GroundingError, Preference};
use crate::spot_search::Facet;

pub const ROOT_KEY: &str = "root";
/// Topic for accepted preferences that name no major category while the
/// root is active.
pub const GENERAL_KEY: &str = "general";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopicNode {
    pub topic_key: String,
    pub created_turn: usize,
    preferences: Vec<Preference>,
    children: Vec<TopicNode>,
}

impl TopicNode {
    fn new(topic_key: &str, created_turn: usize) -> Self {
        Self {
            topic_key: topic_key.to_string(),
            created_turn,
            preferences: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn preferences(&self) -> &[Preference] {
        &self.preferences
    }

    pub fn children(&self) -> &[TopicNode] {
        &self.children
    }

    fn count(&self) -> usize {
        self.preferences.len() + self.children.iter().map(TopicNode::count).sum::<usize>()
    }

    fn walk<'a>(&'a self, out: &mut Vec<&'a Preference>) {
        out.extend(self.preferences.iter());
        for child in &self.children {
            child.walk(out);
        }
    }
}

/// What one `record` call did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordOutcome {
    pub added: usize,
    pub switched_topic: bool,
}

/// Accepted preferences grouped into one branch per topic episode.
///
/// Topic nodes hang directly under the root, keyed by major category. The
/// active path always runs root → current topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonGroundTree {
    root: TopicNode,
    /// Child indices from the root; empty while the root itself is active.
    active_path: Vec<usize>,
}

impl Default for CommonGroundTree {
    fn default() -> Self {
        Self::new()
    }
}

impl CommonGroundTree {
    pub fn new() -> Self {
        Self {
            root: TopicNode::new(ROOT_KEY, 0),
            active_path: Vec::new(),
        }
    }

    pub fn root(&self) -> &TopicNode {
        &self.root
    }

    pub fn active_node(&self) -> &TopicNode {
        self.active_path
            .iter()
            .fold(&self.root, |node, &i| &node.children[i])
    }

    fn active_node_mut(&mut self) -> &mut TopicNode {
        let mut node = &mut self.root;
        for &i in &self.active_path {
            node = &mut node.children[i];
        }
        node
    }

    /// Topic keys from the root to the active node.
    pub fn active_path(&self) -> Vec<&str> {
        let mut keys = vec![self.root.topic_key.as_str()];
        let mut node = &self.root;
        for &i in &self.active_path {
            node = &node.children[i];
            keys.push(node.topic_key.as_str());
        }
        keys
    }

    pub fn active_topic(&self) -> &str {
        &self.active_node().topic_key
    }

    /// Preferences of the active node in insertion order.
    pub fn active_preferences(&self) -> &[Preference] {
        self.active_node().preferences()
    }

    pub fn preference_count(&self) -> usize {
        self.root.count()
    }

    pub fn all_preferences(&self) -> Vec<&Preference> {
        let mut out = Vec::new();
        self.root.walk(&mut out);
        out
    }

    /// Record accepted preferences for `turn`.
    ///
    /// A different dominant major category moves the active path to that
    /// topic's node (reusing it if the topic was visited before); otherwise
    /// preferences join the active node. Repeats already present in the
    /// target node are skipped.
    pub fn record(&mut self, accepted: &[Preference], turn: usize) -> Result<RecordOutcome, GroundingError> {
        if let Some(p) = accepted.iter().find(|p| !p.is_accepted()) {
            return Err(GroundingError::NotAccepted(p.to_string()));
        }
        Ok(self.apply(accepted, turn))
    }

    /// Active preferences as they would be after recording `prefs`, without
    /// touching the tree. Status is not checked.
    pub fn projected_active(&self, prefs: &[Preference], turn: usize) -> Vec<Preference> {
        let mut scratch = self.clone();
        scratch.apply(prefs, turn);
        scratch.active_preferences().to_vec()
    }

    fn apply(&mut self, prefs: &[Preference], turn: usize) -> RecordOutcome {
        if prefs.is_empty() {
            return RecordOutcome {
                added: 0,
                switched_topic: false,
            };
        }
        let current = self.active_topic().to_string();
        let target = match dominant_major(prefs) {
            Dominant::One(major) => Some(major),
            Dominant::Tie(first) if self.active_path.is_empty() => Some(first),
            Dominant::NoMajor if self.active_path.is_empty() => Some(GENERAL_KEY.to_string()),
            Dominant::Tie(_) | Dominant::NoMajor => None,
        };
        let mut switched = false;
        if let Some(topic) = target {
            if !topic.eq_ignore_ascii_case(&current) {
                self.activate(&topic, turn);
                switched = true;
            }
        }

        let node = self.active_node_mut();
        let mut added = 0;
        for pref in prefs {
            if node.preferences.iter().any(|p| p.same_as(pref)) {
                continue;
            }
            node.preferences.push(pref.clone());
            added += 1;
        }
        RecordOutcome {
            added,
            switched_topic: switched,
        }
    }

    fn activate(&mut self, topic: &str, turn: usize) {
        let children = &mut self.root.children;
        let idx = match children.iter().position(|c| c.topic_key.eq_ignore_ascii_case(topic)) {
            Some(i) => i,
            None => {
                // Keep siblings ordered by creation turn.
                let at = children.partition_point(|c| c.created_turn <= turn);
                children.insert(at, TopicNode::new(topic, turn));
                at
            }
        };
        self.active_path = vec![idx];
    }

    /// Invariant check used by tests and debug assertions.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.root.topic_key != ROOT_KEY || !self.root.preferences.is_empty() {
            return Err("root must be keyed `root` and hold no preferences".into());
        }
        if let Some(p) = self.all_preferences().into_iter().find(|p| !p.is_accepted()) {
            return Err(format!("non-accepted preference {p} in tree"));
        }
        let kids = &self.root.children;
        for (i, a) in kids.iter().enumerate() {
            if kids[i + 1..].iter().any(|b| b.topic_key.eq_ignore_ascii_case(&a.topic_key)) {
                return Err(format!("duplicate sibling topic `{}`", a.topic_key));
            }
        }
        if kids.windows(2).any(|w| w[0].created_turn > w[1].created_turn) {
            return Err("siblings out of creation order".into());
        }
        if let Some(&i) = self.active_path.first() {
            if i >= kids.len() || self.active_path.len() > 1 {
                return Err("active path does not follow the tree".into());
            }
        }
        Ok(())
    }
}

enum Dominant {
    One(String),
    /// Several majors share the top count; carries the first one mentioned.
    Tie(String),
    NoMajor,
}

fn dominant_major(prefs: &[Preference]) -> Dominant {
    let mut counts: Vec<(String, usize)> = Vec::new();
    for p in prefs.iter().filter(|p| p.facet() == Facet::MajorCategory) {
        match counts.iter_mut().find(|(k, _)| k.eq_ignore_ascii_case(p.value())) {
            Some((_, n)) => *n += 1,
            None => counts.push((p.value().to_string(), 1)),
        }
    }
    let Some(max) = counts.iter().map(|(_, n)| *n).max() else {
        return Dominant::NoMajor;
    };
    let mut top = counts.into_iter().filter(|(_, n)| *n == max);
    let (first, _) = top.next().expect("max exists");
    if top.next().is_some() {
        Dominant::Tie(first)
    } else {
        Dominant::One(first)
    }
}

#[derive(Serialize)]
struct TreeSnapshot<'a> {
    active_path: Vec<&'a str>,
    root: &'a TopicNode,
}

impl Serialize for CommonGroundTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TreeSnapshot {
            active_path: self.active_path(),
            root: &self.root,
        }
        .serialize(serializer)
    }
}

/// Record accepted preferences into the tree.
pub fn record_preferences(
    tree: &mut CommonGroundTree,
    accepted: &[Preference],
    turn: usize,
) -> Result<RecordOutcome, GroundingError> {
    tree.record(accepted, turn)
}

pub fn active_preferences(tree: &CommonGroundTree) -> &[Preference] {
    tree.active_preferences()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc(facet: Facet, value: &str, turn: usize) -> Preference {
        Preference::extracted(facet, value, turn).unwrap().accepted()
    }

    fn temple_turn() -> Vec<Preference> {
        vec![
            acc(Facet::MajorCategory, "Sightseeing", 0),
            acc(Facet::Subcategory, "Sightseeing -- Shrines and Temples", 0),
            acc(Facet::MinorCategory, "Buildings and Historical Sites -- Historical Buildings", 0),
            acc(Facet::Other, "Kyoto", 0),
        ]
    }

    fn park_turn() -> Vec<Preference> {
        vec![
            acc(Facet::MajorCategory, "Recreation", 4),
            acc(Facet::Subcategory, "Recreation -- Theme Park", 4),
        ]
    }

    #[test]
    fn fresh_tree_is_empty_at_root() {
        let tree = CommonGroundTree::new();
        assert!(tree.active_preferences().is_empty());
        assert_eq!(tree.active_path(), vec!["root"]);
        tree.check_invariants().unwrap();
    }

    #[test]
    fn first_exchange_opens_sightseeing_topic() {
        let mut tree = CommonGroundTree::new();
        let out = tree.record(&temple_turn(), 0).unwrap();
        assert_eq!(out, RecordOutcome { added: 4, switched_topic: true });
        assert_eq!(tree.active_path(), vec!["root", "Sightseeing"]);
        assert_eq!(tree.active_preferences().len(), 4);
    }

    #[test]
    fn topic_switch_creates_sibling_and_isolates_branch() {
        let mut tree = CommonGroundTree::new();
        tree.record(&temple_turn(), 0).unwrap();
        tree.record(&park_turn(), 4).unwrap();
        assert_eq!(tree.active_path(), vec!["root", "Recreation"]);
        assert_eq!(tree.root().children().len(), 2);
        assert!(tree
            .active_preferences()
            .iter()
            .all(|p| !p.value().contains("Sightseeing") && p.value() != "Kyoto"));
        assert_eq!(tree.preference_count(), 6);
        tree.check_invariants().unwrap();
    }

    #[test]
    fn empty_accepted_is_identity() {
        let mut tree = CommonGroundTree::new();
        tree.record(&temple_turn(), 0).unwrap();
        let before = tree.clone();
        tree.record(&[], 1).unwrap();
        assert_eq!(tree, before);
    }

    #[test]
    fn repeats_are_skipped() {
        let mut tree = CommonGroundTree::new();
        tree.record(&temple_turn(), 0).unwrap();
        let n = tree.preference_count();
        let out = tree.record(&temple_turn(), 2).unwrap();
        assert_eq!(out.added, 0);
        assert_eq!(tree.preference_count(), n);
    }

    #[test]
    fn returning_topic_reactivates_existing_node() {
        let mut tree = CommonGroundTree::new();
        tree.record(&temple_turn(), 0).unwrap();
        tree.record(&park_turn(), 4).unwrap();
        tree.record(&[acc(Facet::MajorCategory, "sightseeing", 6)], 6).unwrap();
        assert_eq!(tree.root().children().len(), 2);
        assert_eq!(tree.active_topic(), "Sightseeing");
        assert_eq!(tree.active_preferences().len(), 4);
    }

    #[test]
    fn tie_keeps_current_topic() {
        let mut tree = CommonGroundTree::new();
        tree.record(&temple_turn(), 0).unwrap();
        let mixed = vec![
            acc(Facet::MajorCategory, "Recreation", 2),
            acc(Facet::MajorCategory, "Nature", 2),
        ];
        let out = tree.record(&mixed, 2).unwrap();
        assert!(!out.switched_topic);
        assert_eq!(tree.active_topic(), "Sightseeing");
    }

    #[test]
    fn free_terms_at_root_go_to_general_topic() {
        let mut tree = CommonGroundTree::new();
        tree.record(&[acc(Facet::Other, "Kyoto", 0)], 0).unwrap();
        assert_eq!(tree.active_topic(), GENERAL_KEY);
        tree.check_invariants().unwrap();
    }

    #[test]
    fn unaccepted_preferences_are_rejected() {
        let mut tree = CommonGroundTree::new();
        let raw = Preference::extracted(Facet::Other, "Kyoto", 0).unwrap();
        assert!(matches!(tree.record(&[raw], 0), Err(GroundingError::NotAccepted(_))));
        assert_eq!(tree.preference_count(), 0);
    }

    #[test]
    fn projection_leaves_tree_untouched() {
        let mut tree = CommonGroundTree::new();
        tree.record(&temple_turn(), 0).unwrap();
        let before = tree.clone();
        let raw: Vec<_> = vec![Preference::extracted(Facet::MajorCategory, "Recreation", 3).unwrap()];
        let projected = tree.projected_active(&raw, 3);
        assert_eq!(projected.len(), 1);
        assert_eq!(tree, before);
    }

    #[test]
    fn snapshot_serializes_active_path_by_key() {
        let mut tree = CommonGroundTree::new();
        tree.record(&temple_turn(), 0).unwrap();
        let json = serde_json::to_value(&tree).unwrap();
        assert_eq!(json["active_path"], serde_json::json!(["root", "Sightseeing"]));
        assert_eq!(json["root"]["children"][0]["preferences"][3]["value"], "Kyoto");
        assert_eq!(json["root"]["children"][0]["preferences"][3]["status"], "accepted");
    }
}
