use super::IntentText;

/// Instruction wrapper used for both fine-tuning data and inference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub prefix: String,
    pub suffix: String,
}

pub const INSTRUCTION: &str = "Translate the following intent into a requirement model:";

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            prefix: format!("<s>[INST] {INSTRUCTION}\n"),
            suffix: " [/INST]".into(),
        }
    }
}

impl PromptTemplate {
    pub fn render(&self, intent: &IntentText) -> String {
        format!("{}{}{}", self.prefix, intent.as_str(), self.suffix)
    }
}

pub fn build_prompt(intent: &IntentText) -> String {
    PromptTemplate::default().render(intent)
}

/// Returns the first balanced `{...}` block in `raw`.
///
/// Braces inside JSON string literals are ignored while scanning a block.
/// Code fences need no special handling since they never contain braces.
/// If a `{` never closes, scanning resumes at the next `{` after it.
pub fn extract_json_candidate(raw: &str) -> Option<&str> {
    let bytes = raw.as_bytes();
    let mut start = 0;
    while let Some(offset) = raw[start..].find('{') {
        let open = start + offset;
        if let Some(close) = matching_brace(bytes, open) {
            return Some(&raw[open..=close]);
        }
        start = open + 1;
    }
    None
}

fn matching_brace(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}
