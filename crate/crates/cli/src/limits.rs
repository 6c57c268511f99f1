use anyhow::{anyhow, bail, Context, Result};
use tmacro_core::planner::SearchLimits;
use tmacro_core::time::parse_time;

/// Parses `steps=K,horizon=Q,eps=Q,budget=N`; missing keys keep defaults.
pub fn parse_limits(text: &str) -> Result<SearchLimits> {
    let mut limits = SearchLimits::default();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value in limits, got `{part}`"))?;
        let value = value.trim();
        match key.trim() {
            "steps" => limits.max_steps = value.parse().context("steps")?,
            "budget" => limits.node_budget = value.parse().context("budget")?,
            "horizon" => limits.horizon = parse_time(value).context("horizon")?,
            "eps" => limits.epsilon = parse_time(value).context("eps")?,
            other => bail!("unknown limit `{other}`"),
        }
    }
    let zero = tmacro_core::time::int(0);
    if limits.max_steps == 0 || limits.node_budget == 0 || limits.horizon <= zero || limits.epsilon <= zero {
        bail!("limits must be positive");
    }
    Ok(limits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tmacro_core::time::{int, rat};

    #[test]
    fn partial_limits_keep_defaults() {
        let l = parse_limits("steps=3, horizon=10").unwrap();
        assert_eq!(l.max_steps, 3);
        assert_eq!(l.horizon, int(10));
        assert_eq!(l.epsilon, SearchLimits::default().epsilon);
        let l = parse_limits("eps=0.5,budget=7").unwrap();
        assert_eq!(l.epsilon, rat(1, 2));
        assert_eq!(l.node_budget, 7);
    }

    #[test]
    fn rejects_bad_limits() {
        assert!(parse_limits("steps").is_err());
        assert!(parse_limits("depth=3").is_err());
        assert!(parse_limits("eps=0").is_err());
        assert!(parse_limits("horizon=x").is_err());
    }
}
