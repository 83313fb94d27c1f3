//! Pinned prompt templates. Each LLM template file holds a system part and
//! a user part separated by a `=== user ===` line; `{name}` placeholders
//! are substituted in a single pass.

use crate::types::Platform;

const SEPARATOR: &str = "\n=== user ===\n";

const AGENT_SYSTEM: &str = include_str!("../../prompts/agent_system.txt");
const ACTION_SPACE_DESKTOP: &str = include_str!("../../prompts/action_space_desktop.txt");
const ACTION_SPACE_MOBILE: &str = include_str!("../../prompts/action_space_mobile.txt");

#[derive(Debug, Clone, Copy)]
pub struct PromptTemplate {
    pub name: &'static str,
    raw: &'static str,
}

macro_rules! template {
    ($fn_name:ident, $file:literal) => {
        pub fn $fn_name() -> PromptTemplate {
            PromptTemplate {
                name: $file,
                raw: include_str!(concat!("../../prompts/", $file)),
            }
        }
    };
}

template!(keyword_expansion, "keyword_expansion.v1.txt");
template!(classify_platform, "classify_platform.v1.txt");
template!(extract_task, "extract_task.v1.txt");
template!(content_filter, "content_filter.v1.txt");
template!(screenshot, "screenshot.v1.txt");
template!(trajectory_judge, "trajectory_judge.v1.txt");

impl PromptTemplate {
    fn parts(&self) -> (&'static str, &'static str) {
        self.raw
            .split_once(SEPARATOR)
            .expect("prompt template is missing its user section")
    }

    pub fn system(&self, vars: &[(&str, &str)]) -> String {
        substitute(self.parts().0.trim_end(), vars)
    }

    pub fn user(&self, vars: &[(&str, &str)]) -> String {
        substitute(self.parts().1.trim_end(), vars)
    }
}

/// Replace `{key}` occurrences for the given keys. Unknown placeholders and
/// braces inside substituted values are left untouched.
pub fn substitute(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[..close];
            vars.iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn action_space(platform: Platform) -> &'static str {
    match platform {
        Platform::Desktop => ACTION_SPACE_DESKTOP.trim_end_matches('\n'),
        Platform::Mobile => ACTION_SPACE_MOBILE.trim_end_matches('\n'),
    }
}

/// The agent system prompt with the platform's action space filled in.
pub fn agent_system_prompt(platform: Platform) -> String {
    substitute(
        AGENT_SYSTEM.trim_end_matches('\n'),
        &[("action_space", action_space(platform))],
    )
}
