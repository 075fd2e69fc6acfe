/// A lowercased token with its byte range in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Splits on whitespace; each punctuation or symbol character is its own
/// token; runs of alphanumerics form words. Output is lowercased.
pub fn tokenize_with_offsets(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word_start: Option<usize> = None;
    let flush = |tokens: &mut Vec<Token>, start: usize, end: usize| {
        tokens.push(Token {
            text: text[start..end].to_lowercase(),
            start,
            end,
        });
    };
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            word_start.get_or_insert(i);
            continue;
        }
        if let Some(s) = word_start.take() {
            flush(&mut tokens, s, i);
        }
        if !c.is_whitespace() {
            flush(&mut tokens, i, i + c.len_utf8());
        }
    }
    if let Some(s) = word_start {
        flush(&mut tokens, s, text.len());
    }
    tokens
}

pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with_offsets(text)
        .into_iter()
        .map(|t| t.text)
        .collect()
}

/// Joins tokens with single spaces.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Leading question words stripped by [`trim_question`].
pub const QUESTION_WORDS: &[&str] = &["do", "does", "did", "is", "was", "are", "have"];

/// Drops every `?` and any leading question words.
pub fn trim_question(question: &str) -> Vec<String> {
    let mut tokens: Vec<String> = tokenize(question)
        .into_iter()
        .filter(|t| t != "?")
        .collect();
    let lead = tokens
        .iter()
        .take_while(|t| QUESTION_WORDS.contains(&t.as_str()))
        .count();
    tokens.drain(..lead);
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_words_and_punctuation() {
        assert_eq!(
            tokenize("Do you work in Scotland?"),
            ["do", "you", "work", "in", "scotland", "?"]
        );
        assert_eq!(tokenize("18-year-old"), ["18", "-", "year", "-", "old"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t").is_empty());
        assert_eq!(tokenize("Carer's  £50"), ["carer", "'", "s", "£", "50"]);
    }

    #[test]
    fn offsets_point_into_source() {
        let text = "Über café, ok";
        for t in tokenize_with_offsets(text) {
            assert_eq!(text[t.start..t.end].to_lowercase(), t.text);
        }
    }

    #[test]
    fn trims_question_words() {
        assert_eq!(
            trim_question("Do you work in Scotland?"),
            ["you", "work", "in", "scotland"]
        );
        assert_eq!(
            trim_question("Is it disability related?"),
            ["it", "disability", "related"]
        );
        assert_eq!(
            trim_question("Have you been dismissed?"),
            ["you", "been", "dismissed"]
        );
        assert_eq!(trim_question("DOES it apply?"), ["it", "apply"]);
        // only leading question words go
        assert_eq!(trim_question("Can you do it?"), ["can", "you", "do", "it"]);
    }
}
