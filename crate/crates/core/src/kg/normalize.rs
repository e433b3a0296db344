//! Text normalization shared by alias indexing and knowledge-point linking.

/// Lowercases `text`, maps every character that is neither alphanumeric nor
/// whitespace to a space, then collapses runs of whitespace into single
/// spaces and trims both ends.
pub fn normalize(text: &str) -> String {
    let mapped: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized tokens of `text`.
pub fn tokens(text: &str) -> Vec<String> {
    normalize(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercases_and_strips_punctuation() {
        assert_eq!(normalize("Chicken-Rabbit  Problem!"), "chicken rabbit problem");
        assert_eq!(normalize("  x + y = 35 "), "x y 35");
    }

    #[test]
    fn punctuation_only_is_empty() {
        assert_eq!(normalize("?!  --"), "");
        assert!(tokens("...").is_empty());
    }

    #[test]
    fn unicode_letters_survive() {
        assert_eq!(normalize("Équation\tLINÉAIRE"), "équation linéaire");
    }
}
