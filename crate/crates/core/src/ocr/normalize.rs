use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Character map and casing applied before alignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    /// Replacement pairs; each key is a single character.
    pub map: Vec<(char, String)>,
    pub lowercase: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        let map = [
            ('ſ', "s"),
            ('ﬀ', "ff"),
            ('ﬁ', "fi"),
            ('ﬂ', "fl"),
            ('ﬃ', "ffi"),
            ('ﬄ', "ffl"),
            ('ﬅ', "st"),
            ('ﬆ', "st"),
            ('ꝛ', "r"),
        ]
        .into_iter()
        .map(|(c, s)| (c, s.to_string()))
        .collect();
        NormalizationConfig {
            map,
            lowercase: true,
        }
    }
}

/// NFC, optional lowercasing, character map, then whitespace collapse.
pub fn normalize_text(s: &str, cfg: &NormalizationConfig) -> String {
    let composed: String = s.nfc().collect();
    let cased = if cfg.lowercase {
        composed.to_lowercase()
    } else {
        composed
    };
    let mut mapped = String::with_capacity(cased.len());
    for c in cased.chars() {
        match cfg.map.iter().find(|(k, _)| *k == c) {
            Some((_, v)) if cfg.lowercase => mapped.push_str(&v.to_lowercase()),
            Some((_, v)) => mapped.push_str(v),
            None => mapped.push(c),
        }
    }
    let recomposed: String = mapped.nfc().collect();
    recomposed.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm(s: &str) -> String {
        normalize_text(s, &NormalizationConfig::default())
    }

    #[test]
    fn long_s_and_case() {
        assert_eq!(norm("Geſchichte"), "geschichte");
    }

    #[test]
    fn whitespace_collapse() {
        assert_eq!(norm("a\t b\n"), "a b");
    }

    #[test]
    fn ligature_expansion() {
        assert_eq!(norm("Auﬄug"), "aufflug");
    }

    #[test]
    fn composes_to_nfc() {
        assert_eq!(norm("Mu\u{308}ller"), "m\u{fc}ller");
    }

    #[test]
    fn case_preserved_when_configured() {
        let cfg = NormalizationConfig {
            lowercase: false,
            ..Default::default()
        };
        assert_eq!(normalize_text("Geſchichte  Ü", &cfg), "Geschichte Ü");
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{0,40}") {
            let once = norm(&s);
            prop_assert_eq!(norm(&once), once);
        }

        #[test]
        fn idempotent_on_fraktur_alphabet(s in "[a-zA-ZſßäöüÄÖÜﬀﬁﬂﬃﬄﬅﬆꝛ \t\n\u{308}\u{301}]{0,40}") {
            let once = norm(&s);
            prop_assert_eq!(norm(&once), once);
        }
    }
}
