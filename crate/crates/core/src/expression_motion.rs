//! Expression and motion labels for each system utterance, behind a
//! pluggable classifier with a keyword baseline.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expression {
    Neutral,
    Smile,
    Surprised,
    Troubled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Idle,
    NodMotion,
    PointDisplay,
    Bow,
    Greet,
}

impl Expression {
    pub const ALL: [Expression; 4] = [Expression::Neutral, Expression::Smile, Expression::Surprised, Expression::Troubled];

    pub fn label(self) -> &'static str {
        match self {
            Expression::Neutral => "neutral",
            Expression::Smile => "smile",
            Expression::Surprised => "surprised",
            Expression::Troubled => "troubled",
        }
    }
}

impl Motion {
    pub const ALL: [Motion; 5] = [Motion::Idle, Motion::NodMotion, Motion::PointDisplay, Motion::Bow, Motion::Greet];

    pub fn label(self) -> &'static str {
        match self {
            Motion::Idle => "idle",
            Motion::NodMotion => "nod_motion",
            Motion::PointDisplay => "point_display",
            Motion::Bow => "bow",
            Motion::Greet => "greet",
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for Motion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Expression {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.label() == s.trim())
            .ok_or_else(|| format!("unknown expression `{s}`"))
    }
}

impl FromStr for Motion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.label() == s.trim())
            .ok_or_else(|| format!("unknown motion `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("utterance is empty")]
    EmptyUtterance,
    #[error("classifier failed: {0}")]
    Classifier(String),
    #[error("labelled set is empty")]
    EmptyLabelled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedUtterance {
    pub text: String,
    pub expression: Expression,
    pub motion: Motion,
}

impl AnnotatedUtterance {
    pub fn new(text: &str, expression: Expression, motion: Motion) -> Result<Self, ClassifyError> {
        if text.trim().is_empty() {
            return Err(ClassifyError::EmptyUtterance);
        }
        Ok(Self {
            text: text.to_string(),
            expression,
            motion,
        })
    }
}

pub trait ExpressionMotionClassifier: Send + Sync {
    fn predict(&self, utterance: &str) -> Result<(Expression, Motion), ClassifyError>;
}

const GREETING: &[&str] = &["hello", "hi", "welcome", "good morning", "good afternoon", "good evening", "nice to meet you", "thank you for talking"];
const APOLOGY: &[&str] = &["sorry", "apologize", "apologies", "unfortunately", "i'm afraid"];
const UNCERTAIN: &[&str] = &["not sure", "i don't know", "maybe", "perhaps", "i wonder"];
const PROPOSAL: &[&str] = &["i recommend", "recommend", "how about", "why not", "you could visit", "i suggest"];
const SURPRISE: &[&str] = &["wow", "really", "oh", "amazing"];
const ACKNOWLEDGE: &[&str] = &["alright", "i see", "okay", "ok", "sure", "certainly", "got it"];

/// Keyword and punctuation rules, checked in order: greeting, apology,
/// uncertainty, proposal, surprise, acknowledgement.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleClassifier;

impl RuleClassifier {
    pub fn label(utterance: &str) -> (Expression, Motion) {
        let has = |list: &[&str]| list.iter().any(|k| text::contains_phrase(utterance, k));
        if has(GREETING) {
            (Expression::Smile, Motion::Greet)
        } else if has(APOLOGY) {
            (Expression::Troubled, Motion::Bow)
        } else if has(UNCERTAIN) {
            (Expression::Troubled, Motion::Idle)
        } else if has(PROPOSAL) {
            (Expression::Smile, Motion::PointDisplay)
        } else if has(SURPRISE) && utterance.trim_end().ends_with('!') {
            (Expression::Surprised, Motion::Idle)
        } else if has(ACKNOWLEDGE) {
            (Expression::Neutral, Motion::NodMotion)
        } else {
            (Expression::Neutral, Motion::Idle)
        }
    }
}

impl ExpressionMotionClassifier for RuleClassifier {
    fn predict(&self, utterance: &str) -> Result<(Expression, Motion), ClassifyError> {
        Ok(Self::label(utterance))
    }
}

/// Adapter for an external model: any function from text to two labels.
pub struct FnClassifier(Arc<dyn Fn(&str) -> Result<(Expression, Motion), String> + Send + Sync>);

impl FnClassifier {
    pub fn new(f: impl Fn(&str) -> Result<(Expression, Motion), String> + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl ExpressionMotionClassifier for FnClassifier {
    fn predict(&self, utterance: &str) -> Result<(Expression, Motion), ClassifyError> {
        (self.0)(utterance).map_err(ClassifyError::Classifier)
    }
}

/// Classify one utterance; a failing classifier falls back to the rules.
pub fn classify(utterance: &str, classifier: &dyn ExpressionMotionClassifier) -> Result<(Expression, Motion), ClassifyError> {
    if utterance.trim().is_empty() {
        return Err(ClassifyError::EmptyUtterance);
    }
    match classifier.predict(utterance) {
        Ok(labels) => Ok(labels),
        Err(err) => {
            tracing::warn!(error = %err, "expression classifier fell back to rules");
            Ok(RuleClassifier::label(utterance))
        }
    }
}

/// Exact-match accuracy of expression and motion over a labelled set.
pub fn evaluate_classifier(
    classifier: &dyn ExpressionMotionClassifier,
    labelled: &[AnnotatedUtterance],
) -> Result<(f64, f64), ClassifyError> {
    if labelled.is_empty() {
        return Err(ClassifyError::EmptyLabelled);
    }
    let (mut e_hits, mut m_hits) = (0usize, 0usize);
    for item in labelled {
        let (e, m) = classify(&item.text, classifier)?;
        e_hits += usize::from(e == item.expression);
        m_hits += usize::from(m == item.motion);
    }
    let n = labelled.len() as f64;
    Ok((e_hits as f64 / n, m_hits as f64 / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_examples() {
        assert_eq!(RuleClassifier::label("Hello! Welcome."), (Expression::Smile, Motion::Greet));
        assert_eq!(
            RuleClassifier::label("I recommend this temple."),
            (Expression::Smile, Motion::PointDisplay)
        );
        assert_eq!(RuleClassifier::label("I'm sorry, it is closed."), (Expression::Troubled, Motion::Bow));
        assert_eq!(RuleClassifier::label("Alright then,"), (Expression::Neutral, Motion::NodMotion));
        assert_eq!(RuleClassifier::label("It opens at nine."), (Expression::Neutral, Motion::Idle));
        assert_eq!(RuleClassifier::label("Wow, really!"), (Expression::Surprised, Motion::Idle));
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(classify("  ", &RuleClassifier), Err(ClassifyError::EmptyUtterance));
        assert_eq!(evaluate_classifier(&RuleClassifier, &[]), Err(ClassifyError::EmptyLabelled));
    }

    #[test]
    fn failing_classifier_falls_back() {
        let broken = FnClassifier::new(|_| Err("model offline".into()));
        assert_eq!(classify("Hello!", &broken).unwrap(), (Expression::Smile, Motion::Greet));
    }

    #[test]
    fn labels_round_trip() {
        for e in Expression::ALL {
            assert_eq!(e.label().parse::<Expression>().unwrap(), e);
            assert_eq!(serde_json::to_string(&e).unwrap(), format!("\"{}\"", e.label()));
        }
        for m in Motion::ALL {
            assert_eq!(m.label().parse::<Motion>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.label()));
        }
    }
}
