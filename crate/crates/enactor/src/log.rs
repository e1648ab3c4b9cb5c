use std::fmt;

use skyweave_lts::StateId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    /// Uncontrolled event consumed by the controller.
    In,
    /// Command emitted.
    Out,
    /// Controller replaced; `before` is in the old controller, `after` in the new one.
    Swap,
    /// Fallback engaged by the offending event in `label`.
    Fallback,
    /// Event ignored: outside the alphabet, or received in fallback.
    Absorbed,
    Landed,
    /// Swap request dropped; `label` says why.
    Rejected,
    /// Module manifest applied alongside `reconfig`.
    Modules,
}

impl Dir {
    pub fn as_str(self) -> &'static str {
        match self {
            Dir::In => "in",
            Dir::Out => "out",
            Dir::Swap => "swap",
            Dir::Fallback => "fallback",
            Dir::Absorbed => "absorbed",
            Dir::Landed => "landed",
            Dir::Rejected => "rejected",
            Dir::Modules => "modules",
        }
    }

    pub fn parse(s: &str) -> Option<Dir> {
        [Dir::In, Dir::Out, Dir::Swap, Dir::Fallback, Dir::Absorbed, Dir::Landed, Dir::Rejected, Dir::Modules]
            .into_iter()
            .find(|d| d.as_str() == s)
    }
}

/// One line of the enactment log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub tick: u64,
    pub dir: Dir,
    pub label: String,
    pub before: StateId,
    pub after: StateId,
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {}", self.tick, self.dir.as_str(), self.label, self.before, self.after)
    }
}

impl Record {
    pub fn parse(line: &str) -> Option<Record> {
        let mut it = line.split_whitespace();
        let r = Record {
            tick: it.next()?.parse().ok()?,
            dir: Dir::parse(it.next()?)?,
            label: it.next()?.to_string(),
            before: it.next()?.parse().ok()?,
            after: it.next()?.parse().ok()?,
        };
        it.next().is_none().then_some(r)
    }
}

pub fn render(log: &[Record]) -> String {
    let mut s = String::new();
    for r in log {
        s.push_str(&r.to_string());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_round_trip() {
        let r = Record { tick: 12, dir: Dir::Fallback, label: "at.9".into(), before: 4, after: 0 };
        assert_eq!(r.to_string(), "12 fallback at.9 4 0");
        assert_eq!(Record::parse(&r.to_string()), Some(r));
        assert_eq!(Record::parse("1 sideways go.1 0 1"), None);
        assert_eq!(Record::parse("1 in go.1 0 1 extra"), None);
    }
}
