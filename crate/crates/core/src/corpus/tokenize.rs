use super::Token;

/// Characters split off as standalone tokens.
const PUNCTUATION: &[char] = &[
    '.', ',', '!', '?', ';', ':', '(', ')', '\'', '"', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}',
];

pub fn is_punctuation(c: char) -> bool {
    PUNCTUATION.contains(&c)
}

/// Word-level tokenizer: whitespace split, then every punctuation mark becomes
/// its own token. `"a fairy tale. A"` gives `a fairy tale . A`.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut start = 0;
        for (i, c) in word.char_indices() {
            if is_punctuation(c) {
                if start < i {
                    out.push(Token::new(&word[start..i]).expect("whitespace-free slice"));
                }
                out.push(Token::new(c.to_string()).expect("punctuation char"));
                start = i + c.len_utf8();
            }
        }
        if start < word.len() {
            out.push(Token::new(&word[start..]).expect("whitespace-free slice"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::join_tokens;
    use proptest::prelude::*;

    fn words(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(String::from).collect()
    }

    #[test]
    fn detaches_trailing_period() {
        assert_eq!(words("Nice playground."), ["Nice", "playground", "."]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n\t ").is_empty());
    }

    #[test]
    fn review_rendering_spacing() {
        assert_eq!(
            words("a fairy tale. A very interesting"),
            ["a", "fairy", "tale", ".", "A", "very", "interesting"]
        );
        assert_eq!(
            join_tokens(&tokenize("A wonderful place, you find yourself in a fairy tale.")),
            "A wonderful place , you find yourself in a fairy tale ."
        );
    }

    #[test]
    fn quotes_and_brackets() {
        assert_eq!(words("(it's \u{201C}ok\u{201D})"), ["(", "it", "'", "s", "\u{201C}", "ok", "\u{201D}", ")"]);
        assert_eq!(words("wow!!"), ["wow", "!", "!"]);
    }

    proptest! {
        #[test]
        fn idempotent_on_joined_output(text in "[a-zA-Z .,!?;:()'\"\t\n]{0,60}") {
            let once = tokenize(&text);
            let twice = tokenize(&join_tokens(&once));
            prop_assert_eq!(once, twice);
        }
    }
}
