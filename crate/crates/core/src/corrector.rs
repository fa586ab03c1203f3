//! Corrector-side request building and response parsing. The request texts
//! follow fixed templates, one per training variant, with the mistake list,
//! current prompts, and (where applicable) impact history substituted in.

use crate::backend::{Backend, ChatMessage};
use crate::error::{Result, SptError};
use crate::impact::render_impact_map;
use crate::types::{ImpactLedger, MetaPrompt, Mistake, PromptOrigin, NO_VALID_CHOICE};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    SptP,
    SptPc,
    SptCot,
    SptImp,
}

impl Variant {
    /// Whether this variant also rewrites the corrector's own prompt.
    pub fn updates_corrector(&self) -> bool {
        matches!(self, Variant::SptPc | Variant::SptImp)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Variant::SptP => "spt-p",
            Variant::SptPc => "spt-pc",
            Variant::SptCot => "spt-cot",
            Variant::SptImp => "spt-imp",
        };
        write!(f, "{name}")
    }
}

impl FromStr for Variant {
    type Err = SptError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spt-p" => Ok(Variant::SptP),
            "spt-pc" => Ok(Variant::SptPc),
            "spt-cot" => Ok(Variant::SptCot),
            "spt-imp" => Ok(Variant::SptImp),
            other => Err(SptError::InvalidConfig(format!(
                "unknown variant `{other}` (expected spt-p | spt-pc | spt-cot | spt-imp)"
            ))),
        }
    }
}

const P_UPDATE_TEMPLATE: &str = "Here is a list of questions, answers generated by an LLM and the correct answers. Next, you have the meta-prompt of the LLM. The LLM made mistakes on these questions because of this meta-prompt. Generate an excellent meta-prompt for the LLM so it can find the correct answer for all the questions. You must understand every single question, with every single wrong answer given by the other LLM, and understand why the other LLM answered with a wrong answer. You must pay attention to all the questions' topics and you must ensure the new meta-prompt clearly explains how the LLM should go about answering all the questions about those topics correctly. You must also keep the important ideas in the current meta-prompt intact. Only output the new meta prompt preceded by 'New prompt: '. List of questions: {questions}; Original LLM meta prompt: {p_i}.";

const P_UPDATE_COT_TEMPLATE: &str = "Here is a list of questions, answers generated by an LLM and the correct answers. Next, you have the meta prompt of the LLM. The LLM made mistakes on these questions because of this meta-prompt. First, do a step-by-step reasoning on all the problems with the current prompt that made the LLM fail at finding the right answers. You must understand every single question, with every single wrong answer given by the other LLM, and understand why the other LLM answered with a wrong answer. Then, generate an excellent meta prompt that resolves all those problems. You must pay attention to all the questions' topics. Output the new meta prompt preceded by 'New prompt: '. List of questions: {questions}; Original LLM meta-prompt: {p_i}";

const P_UPDATE_IMPACT_SUFFIX: &str = " Here is a history of sentences and how they impacted the correctness of the LLM out of 1. You must use this information to create a better prompt for the LLM.: {impact_scores}";

const C_UPDATE_TEMPLATE: &str = "You generate better meta-prompts for other LLMs, and these new meta-prompts solve all the mistakes of the LLM. You accomplished it for other LLMs using your meta-prompt c_0: {c_i}. However, the initial meta-prompt of an LLM p_0: \"{p_i}\" and the new meta-prompt p*: \"{p_star}\" that you generated made mistakes on the same questions: {mistakes}. Generate a new meta-prompt for yourself that is better than c_0, that must create better meta-prompts than p* in the future. You must ensure that the new meta-prompt strongly emphasizes your ability to create better meta-prompts for other LLMs, taking into account the aforementioned mistakes. Only output the new meta prompt preceded by 'New prompt:";

const C_UPDATE_IMPACT_TEMPLATE: &str = "You generate better meta-prompts for other LLMs, and these new meta-prompts solve all the mistakes of the LLM. You accomplished it for other LLMs using your meta-prompt c_0: {c_i}. Here are the impact scores of each sentence in another LLM's meta-prompt out of 1: {impact_scores} Generate a new meta-prompt for yourself that is better than c_0 and must create sentences with higher impact scores than the ones mentioned above. Your new meta-prompt should allow you to generate meta-prompts that have sentences that have a high impact score. Only output the new meta-prompt preceded by 'New prompt:";

/// Renders the mistake list shown to the corrector: one block per mistake
/// with the question, its numbered choices, the generator's wrong answer,
/// and the correct answer.
pub fn render_mistakes(mistakes: &[Mistake]) -> String {
    mistakes
        .iter()
        .map(|m| {
            let mut block = format!("Question: {}", m.item.question);
            for (i, choice) in m.item.choices.iter().enumerate() {
                block.push_str(&format!("\n{}. {}", i + 1, choice));
            }
            if m.given_index == NO_VALID_CHOICE {
                block.push_str(&format!("\nLLM answer: {}", m.given_text));
            } else {
                block.push_str(&format!("\nLLM answer: {}. {}", m.given_index + 1, m.given_text));
            }
            block.push_str(&format!(
                "\nCorrect answer: {}. {}",
                m.item.answer_index + 1,
                m.item.choices[m.item.answer_index]
            ));
            block
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Builds the request asking the corrector for an improved generator prompt.
pub fn build_p_update_request(
    variant: Variant,
    c_i: &MetaPrompt,
    p_i: &MetaPrompt,
    mistakes: &[Mistake],
    ledger: Option<&ImpactLedger>,
) -> Result<Vec<ChatMessage>> {
    if mistakes.is_empty() {
        return Err(SptError::InvalidRequest("p-update requires a non-empty mistake list".into()));
    }
    let questions = render_mistakes(mistakes);
    let user = match variant {
        Variant::SptP | Variant::SptPc => P_UPDATE_TEMPLATE
            .replace("{questions}", &questions)
            .replace("{p_i}", &p_i.text),
        Variant::SptCot => P_UPDATE_COT_TEMPLATE
            .replace("{questions}", &questions)
            .replace("{p_i}", &p_i.text),
        Variant::SptImp => {
            let ledger = ledger.ok_or(SptError::MissingLedger)?;
            let mut text = P_UPDATE_TEMPLATE
                .replace("{questions}", &questions)
                .replace("{p_i}", &p_i.text);
            text.push_str(
                &P_UPDATE_IMPACT_SUFFIX.replace("{impact_scores}", &render_impact_map(ledger)),
            );
            text
        }
    };
    Ok(vec![ChatMessage::system(&c_i.text), ChatMessage::user(user)])
}

/// Builds the corrector's self-update request (spt-pc from repeated
/// mistakes, spt-imp from the impact history).
pub fn build_c_update_request(
    variant: Variant,
    c_i: &MetaPrompt,
    p_i: &MetaPrompt,
    p_star: &MetaPrompt,
    repeated_mistakes: &[Mistake],
    ledger: Option<&ImpactLedger>,
) -> Result<Vec<ChatMessage>> {
    let user = match variant {
        Variant::SptPc => C_UPDATE_TEMPLATE
            .replace("{c_i}", &c_i.text)
            .replace("{p_i}", &p_i.text)
            .replace("{p_star}", &p_star.text)
            .replace("{mistakes}", &render_mistakes(repeated_mistakes)),
        Variant::SptImp => {
            let ledger = ledger.ok_or(SptError::MissingLedger)?;
            C_UPDATE_IMPACT_TEMPLATE
                .replace("{c_i}", &c_i.text)
                .replace("{impact_scores}", &render_impact_map(ledger))
        }
        other => return Err(SptError::VariantMismatch(other.to_string())),
    };
    Ok(vec![ChatMessage::system(&c_i.text), ChatMessage::user(user)])
}

pub const NEW_PROMPT_MARKER: &str = "new prompt:";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedPrompt {
    pub text: String,
    /// True when the response carried no `New prompt:` marker and the whole
    /// trimmed response was taken as a lenient fallback.
    pub marker_missing: bool,
}

/// Extracts the prompt after the LAST case-insensitive `New prompt:` marker,
/// stripping surrounding whitespace and one pair of wrapping quotes. Without
/// a marker, the whole trimmed response is returned and flagged.
pub fn parse_new_prompt(response: &str) -> Result<ParsedPrompt> {
    let lowered = response.to_lowercase();
    let (raw, marker_missing) = match lowered.rfind(NEW_PROMPT_MARKER) {
        Some(pos) => (&response[pos + NEW_PROMPT_MARKER.len()..], false),
        None => (response, true),
    };
    let mut text = raw.trim();
    for quote in ['"', '\''] {
        if text.len() >= 2 && text.starts_with(quote) && text.ends_with(quote) {
            text = text[1..text.len() - 1].trim();
        }
    }
    if text.is_empty() {
        return Err(SptError::EmptyAfterParse);
    }
    Ok(ParsedPrompt { text: text.to_string(), marker_missing })
}

/// Issues `n` independent p-update requests and parses the replies into
/// candidates, dropping empty results and exact duplicates
/// (post-normalization). Requests run in order so that scripted-mock replay
/// is deterministic; ordering is by request index.
#[allow(clippy::too_many_arguments)]
pub fn generate_candidates(
    backend: &Backend,
    variant: Variant,
    c_i: &MetaPrompt,
    p_i: &MetaPrompt,
    mistakes: &[Mistake],
    n: usize,
    ledger: Option<&ImpactLedger>,
    epoch: usize,
    temperature: f64,
) -> Result<Vec<MetaPrompt>> {
    if n == 0 {
        return Err(SptError::InvalidConfig("n_candidates must be at least 1".into()));
    }
    let request = build_p_update_request(variant, c_i, p_i, mistakes, ledger)?;
    let mut candidates: Vec<MetaPrompt> = Vec::new();
    for k in 0..n {
        let response = backend.complete(&request, temperature)?;
        let parsed = match parse_new_prompt(&response) {
            Ok(parsed) => parsed,
            Err(SptError::EmptyAfterParse) => continue,
            Err(other) => return Err(other),
        };
        let candidate = MetaPrompt::new(
            parsed.text,
            PromptOrigin::CorrectorCandidate { epoch, candidate_index: k },
        );
        let normalized = candidate.normalized_text();
        if candidates.iter().any(|c| c.normalized_text() == normalized) {
            continue;
        }
        candidates.push(candidate);
    }
    if candidates.is_empty() {
        return Err(SptError::AllCandidatesFailed);
    }
    Ok(candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockScript;
    use crate::types::McqItem;

    fn mistake() -> Mistake {
        let item = McqItem::new(
            "q1".into(),
            "What color is the sky?".into(),
            vec!["green".into(), "blue".into(), "red".into()],
            1,
        )
        .unwrap();
        Mistake::new(item, 2).unwrap()
    }

    fn c0() -> MetaPrompt {
        MetaPrompt::initial("You are an AI expert. You can generate new meta-prompts for another LLM so that this LLM is better at answering questions.")
    }

    #[test]
    fn p_update_keeps_anchor_sentences() {
        let msgs = build_p_update_request(Variant::SptP, &c0(), &MetaPrompt::initial(""), &[mistake()], None).unwrap();
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0].content, c0().text);
        assert!(msgs[1]
            .content
            .contains("You must also keep the important ideas in the current meta-prompt intact."));
        assert!(msgs[1].content.contains("preceded by 'New prompt: '"));
        assert!(msgs[1].content.contains("What color is the sky?"));
        assert!(msgs[1].content.contains("LLM answer: 3. red"));
        assert!(msgs[1].content.contains("Correct answer: 2. blue"));
    }

    #[test]
    fn cot_variant_asks_for_reasoning() {
        let msgs = build_p_update_request(Variant::SptCot, &c0(), &MetaPrompt::initial("p"), &[mistake()], None).unwrap();
        assert!(msgs[1].content.contains("do a step-by-step reasoning"));
    }

    #[test]
    fn imp_variant_requires_ledger_and_renders_empty_map() {
        let err = build_p_update_request(Variant::SptImp, &c0(), &MetaPrompt::initial("p"), &[mistake()], None);
        assert!(matches!(err, Err(SptError::MissingLedger)));
        let ledger = ImpactLedger::default();
        let msgs =
            build_p_update_request(Variant::SptImp, &c0(), &MetaPrompt::initial("p"), &[mistake()], Some(&ledger))
                .unwrap();
        assert!(msgs[1].content.ends_with("create a better prompt for the LLM.: {}"));
    }

    #[test]
    fn c_update_embeds_both_prompts() {
        let p_i = MetaPrompt::initial("old prompt");
        let p_star = MetaPrompt::initial("better prompt");
        let msgs =
            build_c_update_request(Variant::SptPc, &c0(), &p_i, &p_star, &[mistake()], None).unwrap();
        assert!(msgs[1].content.contains("p_0: \"old prompt\""));
        assert!(msgs[1].content.contains("p*: \"better prompt\""));
        assert!(msgs[1].content.contains("Generate a new meta-prompt for yourself that is better than c_0"));
    }

    #[test]
    fn c_update_rejects_wrong_variants() {
        let p = MetaPrompt::initial("p");
        for variant in [Variant::SptP, Variant::SptCot] {
            assert!(matches!(
                build_c_update_request(variant, &c0(), &p, &p, &[], None),
                Err(SptError::VariantMismatch(_))
            ));
        }
    }

    #[test]
    fn parse_takes_last_marker_and_strips_quotes() {
        assert_eq!(
            parse_new_prompt("New prompt: Be careful with ratios.").unwrap().text,
            "Be careful with ratios."
        );
        let parsed = parse_new_prompt("reasoning about New prompt: drafts\nNew prompt: Always verify units.").unwrap();
        assert_eq!(parsed.text, "Always verify units.");
        assert!(!parsed.marker_missing);
        assert_eq!(parse_new_prompt("NEW PROMPT: \"quoted\"").unwrap().text, "quoted");
    }

    #[test]
    fn parse_fallback_and_empty() {
        let parsed = parse_new_prompt("just a prompt with no marker").unwrap();
        assert!(parsed.marker_missing);
        assert_eq!(parsed.text, "just a prompt with no marker");
        assert!(matches!(parse_new_prompt("New prompt: "), Err(SptError::EmptyAfterParse)));
        assert!(matches!(parse_new_prompt("   "), Err(SptError::EmptyAfterParse)));
    }

    fn candidate_backend(replies: Vec<String>) -> Backend {
        let mut script = MockScript::default();
        let request =
            build_p_update_request(Variant::SptP, &c0(), &MetaPrompt::initial(""), &[mistake()], None).unwrap();
        script.add_completion(&request, replies);
        Backend::from_script(script)
    }

    #[test]
    fn distinct_candidates_kept_in_request_order() {
        let backend = candidate_backend(vec![
            "New prompt: A.".into(),
            "New prompt: B.".into(),
            "New prompt: C.".into(),
        ]);
        let candidates = generate_candidates(
            &backend,
            Variant::SptP,
            &c0(),
            &MetaPrompt::initial(""),
            &[mistake()],
            3,
            None,
            0,
            1.0,
        )
        .unwrap();
        let texts: Vec<&str> = candidates.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, vec!["A.", "B.", "C."]);
        assert_eq!(
            candidates[2].origin,
            PromptOrigin::CorrectorCandidate { epoch: 0, candidate_index: 2 }
        );
    }

    #[test]
    fn duplicates_are_dropped() {
        let backend = candidate_backend(vec!["New prompt: Same.".into()]);
        let candidates = generate_candidates(
            &backend,
            Variant::SptP,
            &c0(),
            &MetaPrompt::initial(""),
            &[mistake()],
            3,
            None,
            0,
            1.0,
        )
        .unwrap();
        assert_eq!(candidates.len(), 1);
    }

    #[test]
    fn all_empty_responses_fail() {
        let backend = candidate_backend(vec!["New prompt: ".into()]);
        let result = generate_candidates(
            &backend,
            Variant::SptP,
            &c0(),
            &MetaPrompt::initial(""),
            &[mistake()],
            2,
            None,
            0,
            1.0,
        );
        assert!(matches!(result, Err(SptError::AllCandidatesFailed)));
    }
}
