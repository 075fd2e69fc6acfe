//! Synthetic rule/dialog corpus with exact gold labels.
//!
//! Each rule document is a lead-in sentence naming a topic and the logic
//! ("all" or "any" of the following) plus one bullet per condition. The user
//! holds a hidden truth value for every condition. Some conditions are stated
//! in the scenario (a false one is stated with a different value), the rest
//! are asked in document order. One dialog state is sampled per example.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::labeling::label_span;
use super::segment::segment_rules;
use super::store::LabeledExample;
use super::types::{Answer, Decision, DialogExample, EntailmentLabel, QaTurn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Logic {
    /// Every condition must hold.
    All,
    /// At least one condition must hold.
    Any,
}

impl Logic {
    pub fn word(self) -> &'static str {
        match self {
            Logic::All => "all",
            Logic::Any => "any",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub num_examples: usize,
    pub min_conditions: usize,
    pub max_conditions: usize,
    /// Probability that a rule is a conjunction rather than a disjunction.
    pub conjunction_probability: f64,
    /// Probability that a condition is stated in the scenario.
    pub scenario_coverage: f64,
    /// Probability of an off-topic initial question.
    pub irrelevant_probability: f64,
    /// Probability of adding one unrelated fact to the scenario.
    pub filler_probability: f64,
    /// Distinct values used per attribute (at most 8).
    pub values_per_attribute: usize,
    /// Number of topics rules are drawn from (at most 12).
    pub num_topics: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_examples: 5000,
            min_conditions: 1,
            max_conditions: 3,
            conjunction_probability: 0.5,
            scenario_coverage: 0.3,
            irrelevant_probability: 0.1,
            filler_probability: 0.3,
            values_per_attribute: 6,
            num_topics: 12,
        }
    }
}

impl SyntheticConfig {
    /// The standard corpus: 2–4 sentence rules, 5000 training examples.
    pub fn standard() -> Self {
        Self::default()
    }

    pub fn with_examples(mut self, n: usize) -> Self {
        self.num_examples = n;
        self
    }
}

#[derive(Clone, Copy)]
enum Aux {
    Do,
    Be,
}

struct Attribute {
    aux: Aux,
    /// Rule/question phrase before the value, second person.
    phrase: &'static str,
    /// Same phrase in the first person, for scenario statements.
    first_person: &'static str,
    values: [&'static str; 8],
}

const ATTRIBUTES: &[Attribute] = &[
    Attribute {
        aux: Aux::Do,
        phrase: "live in",
        first_person: "live in",
        values: [
            "scotland", "wales", "england", "ireland", "france", "spain", "italy", "norway",
        ],
    },
    Attribute {
        aux: Aux::Do,
        phrase: "work as a",
        first_person: "work as a",
        values: [
            "nurse", "teacher", "farmer", "driver", "builder", "cleaner", "chef", "pilot",
        ],
    },
    Attribute {
        aux: Aux::Do,
        phrase: "own a",
        first_person: "own a",
        values: [
            "car", "house", "boat", "farm", "shop", "van", "horse", "caravan",
        ],
    },
    Attribute {
        aux: Aux::Do,
        phrase: "study",
        first_person: "study",
        values: [
            "law", "medicine", "history", "physics", "music", "art", "nursing", "finance",
        ],
    },
    Attribute {
        aux: Aux::Do,
        phrase: "care for your",
        first_person: "care for my",
        values: [
            "mother", "father", "son", "daughter", "partner", "brother", "sister", "grandson",
        ],
    },
    Attribute {
        aux: Aux::Be,
        phrase: "a",
        first_person: "a",
        values: [
            "student",
            "veteran",
            "carer",
            "parent",
            "pensioner",
            "tenant",
            "landlord",
            "volunteer",
        ],
    },
    Attribute {
        aux: Aux::Do,
        phrase: "have a",
        first_person: "have a",
        values: [
            "disability",
            "mortgage",
            "pet",
            "garden",
            "passport",
            "visa",
            "degree",
            "loan",
        ],
    },
    Attribute {
        aux: Aux::Do,
        phrase: "pay",
        first_person: "pay",
        values: [
            "rent", "tax", "fees", "rates", "tuition", "interest", "wages", "premiums",
        ],
    },
];

const TOPICS: &[&str] = &[
    "grant",
    "benefit",
    "allowance",
    "permit",
    "licence",
    "pension",
    "refund",
    "rebate",
    "bursary",
    "voucher",
    "discount",
    "subsidy",
];

const ASKS: &[&str] = &[
    "Can I get the {}?",
    "Am I eligible for the {}?",
    "Can I apply for the {}?",
];

#[derive(Clone, Copy, Debug)]
struct Condition {
    attribute: usize,
    value: usize,
}

impl Condition {
    fn attr(&self) -> &'static Attribute {
        &ATTRIBUTES[self.attribute]
    }

    fn bullet(&self) -> String {
        let a = self.attr();
        match a.aux {
            Aux::Do => format!("you {} {}", a.phrase, a.values[self.value]),
            Aux::Be => format!("you are {} {}", a.phrase, a.values[self.value]),
        }
    }

    fn question(&self) -> String {
        let a = self.attr();
        match a.aux {
            Aux::Do => format!("Do you {} {}?", a.phrase, a.values[self.value]),
            Aux::Be => format!("Are you {} {}?", a.phrase, a.values[self.value]),
        }
    }

    fn statement(attribute: usize, value: usize) -> String {
        let a = &ATTRIBUTES[attribute];
        match a.aux {
            Aux::Do => format!("I {} {}.", a.first_person, a.values[value]),
            Aux::Be => format!("I am {} {}.", a.first_person, a.values[value]),
        }
    }
}

/// Gold decision from per-condition states.
pub fn decide_from_states(logic: Logic, states: &[EntailmentLabel]) -> Decision {
    use EntailmentLabel::*;
    let any = |l| states.iter().any(|s| *s == l);
    let all = |l| states.iter().all(|s| *s == l);
    match logic {
        Logic::All if any(Contradiction) => Decision::No,
        Logic::All if all(Entailment) => Decision::Yes,
        Logic::Any if any(Entailment) => Decision::Yes,
        Logic::Any if all(Contradiction) => Decision::No,
        _ => Decision::Inquire,
    }
}

/// Generation metadata kept alongside each example for diagnostics and
/// independent checking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMeta {
    pub logic: Logic,
    pub topic: String,
    pub irrelevant: bool,
    /// Hidden truth value of each condition, in bullet order.
    pub truth: Vec<bool>,
    /// Conditions stated in the scenario.
    pub in_scenario: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticExample {
    pub labeled: LabeledExample,
    pub meta: SyntheticMeta,
}

pub struct SyntheticCorpus {
    pub train: Vec<SyntheticExample>,
    pub dev: Vec<SyntheticExample>,
}

impl SyntheticCorpus {
    pub fn train_labeled(&self) -> Vec<LabeledExample> {
        self.train.iter().map(|e| e.labeled.clone()).collect()
    }

    pub fn dev_labeled(&self) -> Vec<LabeledExample> {
        self.dev.iter().map(|e| e.labeled.clone()).collect()
    }
}

/// Generates `config.num_examples` examples; fully determined by `seed`.
pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Vec<SyntheticExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..config.num_examples)
        .map(|i| generate_one(config, &mut rng, format!("syn-{seed}-{i}")))
        .collect()
}

/// Standard train/dev split: the dev set is one tenth of the training size,
/// drawn from an independent stream.
pub fn generate_split(config: &SyntheticConfig, seed: u64) -> SyntheticCorpus {
    let dev_config = SyntheticConfig {
        num_examples: (config.num_examples / 10).max(1),
        ..config.clone()
    };
    let mut dev = generate_synthetic(&dev_config, seed ^ 0x5eed_dead_beef);
    for (i, ex) in dev.iter_mut().enumerate() {
        ex.labeled.example.id = format!("syn-dev-{seed}-{i}");
    }
    SyntheticCorpus {
        train: generate_synthetic(config, seed),
        dev,
    }
}

fn generate_one(config: &SyntheticConfig, rng: &mut ChaCha8Rng, id: String) -> SyntheticExample {
    let n_values = config.values_per_attribute.clamp(2, 8);
    let n_topics = config.num_topics.clamp(2, TOPICS.len());
    let max_c = config.max_conditions.clamp(1, ATTRIBUTES.len() - 1);
    let min_c = config.min_conditions.clamp(1, max_c);
    let n = rng.gen_range(min_c..=max_c);
    let logic = if rng.gen_bool(config.conjunction_probability) {
        Logic::All
    } else {
        Logic::Any
    };
    let topic = TOPICS[rng.gen_range(0..n_topics)];

    let mut attrs: Vec<usize> = (0..ATTRIBUTES.len()).collect();
    attrs.shuffle(rng);
    let conditions: Vec<Condition> = attrs[..n]
        .iter()
        .map(|&attribute| Condition {
            attribute,
            value: rng.gen_range(0..n_values),
        })
        .collect();

    let mut rule = format!(
        "You can get the {topic} if {} of the following apply:\n",
        logic.word()
    );
    for c in &conditions {
        rule.push_str(&format!("* {}\n", c.bullet()));
    }
    let rule = segment_rules(&rule).expect("generated rule is non-empty");

    let truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let in_scenario: Vec<bool> = (0..n)
        .map(|_| rng.gen_bool(config.scenario_coverage))
        .collect();

    let mut facts: Vec<String> = Vec::new();
    for (j, c) in conditions.iter().enumerate() {
        if in_scenario[j] {
            let value = if truth[j] {
                c.value
            } else {
                let other = rng.gen_range(0..n_values - 1);
                if other >= c.value {
                    other + 1
                } else {
                    other
                }
            };
            facts.push(Condition::statement(c.attribute, value));
        }
    }
    if rng.gen_bool(config.filler_probability) {
        let attribute = attrs[n];
        facts.push(Condition::statement(attribute, rng.gen_range(0..n_values)));
    }
    facts.shuffle(rng);
    let scenario = facts.join(" ");
    let evidence: Vec<QaTurn> = conditions
        .iter()
        .enumerate()
        .filter(|(j, _)| in_scenario[*j])
        .map(|(j, c)| QaTurn::new(c.question(), answer_of(truth[j])))
        .collect();

    let ask = ASKS[rng.gen_range(0..ASKS.len())];
    let irrelevant = rng.gen_bool(config.irrelevant_probability);
    let meta_base = |irrelevant: bool, topic_asked: &str| SyntheticMeta {
        logic,
        topic: topic_asked.to_string(),
        irrelevant,
        truth: truth.clone(),
        in_scenario: in_scenario.clone(),
    };

    if irrelevant {
        let others: Vec<&str> = TOPICS[..n_topics]
            .iter()
            .copied()
            .filter(|t| *t != topic)
            .collect();
        let other = others[rng.gen_range(0..others.len())];
        let example = DialogExample {
            id,
            question: ask.replace("{}", other),
            scenario,
            history: vec![],
            decision: Decision::Irrelevant,
            follow_up: None,
            evidence,
            rule,
        };
        let labeled = LabeledExample {
            entailment: vec![EntailmentLabel::Unknown; example.rule.len()],
            span: None,
            example,
        };
        return SyntheticExample {
            labeled,
            meta: meta_base(true, other),
        };
    }

    // Roll the dialog forward, asking the first unresolved condition each
    // turn, until a final decision; then pick one state.
    let mut states: Vec<EntailmentLabel> = (0..n)
        .map(|j| {
            if in_scenario[j] {
                answer_of(truth[j]).into()
            } else {
                EntailmentLabel::Unknown
            }
        })
        .collect();
    let mut snapshots: Vec<(Vec<QaTurn>, Vec<EntailmentLabel>)> = Vec::new();
    let mut history: Vec<QaTurn> = Vec::new();
    loop {
        snapshots.push((history.clone(), states.clone()));
        if decide_from_states(logic, &states).is_final() {
            break;
        }
        let j = states
            .iter()
            .position(|s| *s == EntailmentLabel::Unknown)
            .expect("an Inquire state has an unresolved condition");
        history.push(QaTurn::new(conditions[j].question(), answer_of(truth[j])));
        states[j] = answer_of(truth[j]).into();
    }
    let (history, states) = snapshots.swap_remove(rng.gen_range(0..snapshots.len()));
    let decision = decide_from_states(logic, &states);
    let (follow_up, span) = if decision == Decision::Inquire {
        let j = states
            .iter()
            .position(|s| *s == EntailmentLabel::Unknown)
            .unwrap();
        let question = conditions[j].question();
        let span = label_span(&rule, &question);
        debug_assert_eq!(span.sentence, j + 1);
        (Some(question), Some(span))
    } else {
        (None, None)
    };
    let mut entailment = vec![EntailmentLabel::Unknown];
    entailment.extend(states);
    let example = DialogExample {
        id,
        question: ask.replace("{}", topic),
        scenario,
        history,
        decision,
        follow_up,
        evidence,
        rule,
    };
    SyntheticExample {
        labeled: LabeledExample {
            example,
            span,
            entailment,
        },
        meta: meta_base(false, topic),
    }
}

fn answer_of(truth: bool) -> Answer {
    if truth {
        Answer::Yes
    } else {
        Answer::No
    }
}
