//! Rule-based English plural reduction for object and motion labels.

/// Words that look plural but are not, or whose plural is irregular.
const INVARIANT: &[&str] = &[
    "asparagus", "bass", "chess", "couscous", "molasses", "grits", "hummus", "news",
    "oats", "series", "species", "swiss", "watercress", "lemongrass", "glasses",
    "tongs", "scissors", "chickpeas", "brussels", "citrus", "octopus", "floss",
];

const IRREGULAR: &[(&str, &str)] = &[
    ("leaves", "leaf"),
    ("loaves", "loaf"),
    ("halves", "half"),
    ("knives", "knife"),
    ("shelves", "shelf"),
    ("calves", "calf"),
    ("children", "child"),
    ("teeth", "tooth"),
    ("geese", "goose"),
    ("mice", "mouse"),
    ("cookies", "cookie"),
    ("pies", "pie"),
    ("ties", "tie"),
    ("shoes", "shoe"),
    ("canoes", "canoe"),
    ("sauces", "sauce"),
    ("slices", "slice"),
    ("pieces", "piece"),
    ("spices", "spice"),
    ("juices", "juice"),
    ("dices", "dice"),
];

fn singular_word(word: &str) -> String {
    if INVARIANT.contains(&word) {
        return word.to_string();
    }
    if let Some((_, single)) = IRREGULAR.iter().find(|(plural, _)| *plural == word) {
        return (*single).to_string();
    }
    if word.chars().count() <= 3 || !word.ends_with('s') {
        return word.to_string();
    }
    if word.ends_with("ss") || word.ends_with("us") || word.ends_with("is") {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        return format!("{stem}y");
    }
    if let Some(stem) = word.strip_suffix("oes") {
        return format!("{stem}o");
    }
    for suffix in ["sses", "ches", "shes", "xes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    word[..word.len() - 1].to_string()
}

/// Reduce the last word of a label to its singular form. Idempotent.
pub fn singularize(label: &str) -> String {
    match label.rsplit_once(' ') {
        Some((head, last)) => format!("{head} {}", singular_word(last)),
        None => singular_word(label),
    }
}
