//! Pulling structure out of free-form model replies.

/// Itemized steps from a reply with list markers (`1.`, `2)`, `-`, `*`,
/// `Step 3:`) removed. When some lines carry a marker, unmarked lines are
/// chatter and are dropped; otherwise every non-empty line is a step.
pub fn parse_steps(text: &str) -> Vec<String> {
    let lines: Vec<(&str, bool)> = text
        .lines()
        .map(|line| match strip_marker(line) {
            Some(step) => (step, true),
            None => (line.trim(), false),
        })
        .filter(|(line, _)| !line.is_empty())
        .collect();
    let itemized = lines.iter().any(|(_, marked)| *marked);
    lines
        .into_iter()
        .filter(|(_, marked)| *marked || !itemized)
        .map(|(line, _)| line.to_string())
        .collect()
}

fn strip_marker(line: &str) -> Option<&str> {
    let mut rest = line.trim();
    if let Some(after) = rest.strip_prefix("Step ").or_else(|| rest.strip_prefix("step ")) {
        rest = after.trim_start();
    }
    for bullet in ["- ", "* ", "• "] {
        if let Some(after) = rest.strip_prefix(bullet) {
            return Some(after.trim());
        }
    }
    let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    rest[digits..].strip_prefix(['.', ')', ':']).map(str::trim)
}

/// The JSON object in a reply: the body of the first fenced code block if
/// there is one, otherwise the span from the first `{` to the last `}`.
pub fn extract_json(text: &str) -> Option<&str> {
    if let Some(start) = text.find("```") {
        let after = &text[start + 3..];
        let body_start = after.find('\n').map_or(0, |i| i + 1);
        let body = &after[body_start..];
        if let Some(end) = body.find("```") {
            let inner = body[..end].trim();
            if !inner.is_empty() {
                return Some(inner);
            }
        }
    }
    let open = text.find('{')?;
    let close = text.rfind('}')?;
    (open < close).then(|| &text[open..=close])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_markers_are_removed() {
        let text = "Here you go:\n\n1. Pour milk\n2) Add sugar\n- Stir\nStep 4: Serve\n  10. Clean up  \n";
        assert_eq!(
            parse_steps(text),
            ["Pour milk", "Add sugar", "Stir", "Serve", "Clean up"]
        );
        assert_eq!(parse_steps("Pour milk\n\nStir"), ["Pour milk", "Stir"]);
    }

    #[test]
    fn numbers_inside_steps_survive() {
        assert_eq!(parse_steps("1. Bake at 180 degrees"), ["Bake at 180 degrees"]);
        assert_eq!(parse_steps("2 eggs"), ["2 eggs"]);
    }

    #[test]
    fn json_is_found_in_fences_or_braces() {
        assert_eq!(extract_json("Sure:\n```json\n{\"a\": 1}\n```\nDone"), Some("{\"a\": 1}"));
        assert_eq!(extract_json("```\n{}\n```"), Some("{}"));
        assert_eq!(extract_json("text {\"a\": {\"b\": 2}} tail"), Some("{\"a\": {\"b\": 2}}"));
        assert_eq!(extract_json("no json here"), None);
    }
}
