//! A small path-pattern language for selecting TEI elements.
//!
//! Supported: `/` and `//` axes, name or `*` steps, attribute equality and
//! inequality, prefix tests (`starts-with(@a,'x')` or
//! `substring(@a,1,k)='x'`), attribute presence, `not(...)`, `self::name`,
//! and an optional trailing `/@attr` that selects an attribute value instead
//! of the element's text.

use std::fmt;

use roxmltree::Node;

use crate::error::{Error, Result};

const XML_NS: &str = "http://www.w3.org/XML/1998/namespace";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Child,
    Descendant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrTest {
    Present,
    Equals(String),
    NotEquals(String),
    Prefix(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    Attr { name: String, test: AttrTest },
    SelfName(String),
    Not(Box<Predicate>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub axis: Axis,
    /// `None` matches any element.
    pub name: Option<String>,
    pub predicates: Vec<Predicate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathPattern {
    source: String,
    steps: Vec<Step>,
    attribute: Option<String>,
}

impl fmt::Display for PathPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

/// Attribute lookup by qualified name; `xml:` prefixes resolve to the XML namespace.
pub(crate) fn attr<'a>(node: Node<'a, '_>, name: &str) -> Option<&'a str> {
    match name.split_once(':') {
        Some(("xml", local)) => node.attribute((XML_NS, local)),
        Some((_, local)) => node
            .attributes()
            .find(|a| a.name() == local)
            .map(|a| a.value()),
        None => node.attribute(name),
    }
}

impl AttrTest {
    fn eval(&self, value: Option<&str>) -> bool {
        match self {
            AttrTest::Present => value.is_some(),
            AttrTest::Equals(v) => value == Some(v.as_str()),
            AttrTest::NotEquals(v) => value.is_some_and(|x| x != v),
            // substring() of a missing attribute is the empty string.
            AttrTest::Prefix(p) => value.unwrap_or("").starts_with(p.as_str()),
        }
    }
}

impl Predicate {
    fn eval(&self, node: Node) -> bool {
        match self {
            Predicate::Attr { name, test } => test.eval(attr(node, name)),
            Predicate::SelfName(n) => node.tag_name().name() == local_name(n),
            Predicate::Not(p) => !p.eval(node),
        }
    }
}

fn local_name(name: &str) -> &str {
    name.rsplit_once(':').map_or(name, |(_, l)| l)
}

impl Step {
    fn matches(&self, node: Node) -> bool {
        node.is_element()
            && self
                .name
                .as_deref()
                .is_none_or(|n| node.tag_name().name() == local_name(n))
            && self.predicates.iter().all(|p| p.eval(node))
    }
}

impl PathPattern {
    pub fn parse(source: &str) -> Result<Self> {
        Parser::new(source).pattern()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Attribute selected by a trailing `/@name`, if any.
    pub fn attribute(&self) -> Option<&str> {
        self.attribute.as_deref()
    }

    /// Name of the last step, when it is not a wildcard.
    pub fn target_name(&self) -> Option<&str> {
        self.steps.last().and_then(|s| s.name.as_deref())
    }

    pub fn matches(&self, node: Node) -> bool {
        self.matches_at(node, self.steps.len() - 1)
    }

    /// Value selected from a matching node: the attribute for `/@attr` patterns.
    pub fn select_attribute<'a>(&self, node: Node<'a, '_>) -> Option<&'a str> {
        self.attribute.as_deref().and_then(|a| attr(node, a))
    }

    fn matches_at(&self, node: Node, k: usize) -> bool {
        let step = &self.steps[k];
        if !step.matches(node) {
            return false;
        }
        if k == 0 {
            return match step.axis {
                Axis::Descendant => true,
                Axis::Child => node.parent().is_some_and(|p| p.is_root()),
            };
        }
        match step.axis {
            Axis::Child => node
                .parent_element()
                .is_some_and(|p| self.matches_at(p, k - 1)),
            Axis::Descendant => node.ancestors().skip(1).any(|a| a.is_element() && self.matches_at(a, k - 1)),
        }
    }
}

struct Parser<'s> {
    src: &'s str,
    pos: usize,
}

impl<'s> Parser<'s> {
    fn new(src: &'s str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Pattern {
            pattern: self.src.to_string(),
            message: format!("{} (at offset {})", message.into(), self.pos),
        }
    }

    fn rest(&self) -> &'s str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += self.rest().chars().next().unwrap().len_utf8();
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{token}`")))
        }
    }

    fn name(&mut self) -> Result<String> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':')))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.err("expected a name"));
        }
        let n = self.rest()[..len].to_string();
        self.pos += len;
        Ok(n)
    }

    fn string(&mut self) -> Result<String> {
        self.skip_ws();
        let quote = match self.rest().chars().next() {
            Some(q @ ('\'' | '"')) => q,
            _ => return Err(self.err("expected a quoted string")),
        };
        self.pos += 1;
        let end = self
            .rest()
            .find(quote)
            .ok_or_else(|| self.err("unterminated string"))?;
        let s = self.rest()[..end].to_string();
        self.pos += end + 1;
        Ok(s)
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(self.rest().len());
        let n = self.rest()[..len]
            .parse()
            .map_err(|_| self.err("expected an integer"))?;
        self.pos += len;
        Ok(n)
    }

    fn pattern(mut self) -> Result<PathPattern> {
        let mut steps = Vec::new();
        let mut attribute = None;
        loop {
            let axis = if self.eat("//") {
                Axis::Descendant
            } else if self.eat("/") {
                Axis::Child
            } else if steps.is_empty() {
                return Err(self.err("pattern must start with `/` or `//`"));
            } else {
                break;
            };
            if self.eat("@") {
                if axis != Axis::Child || steps.is_empty() {
                    return Err(self.err("attribute selection must follow an element step as `/@name`"));
                }
                attribute = Some(self.name()?);
                break;
            }
            let name = if self.eat("*") { None } else { Some(self.name()?) };
            let mut predicates = Vec::new();
            while self.eat("[") {
                predicates.push(self.predicate()?);
                self.expect("]")?;
            }
            steps.push(Step {
                axis,
                name,
                predicates,
            });
        }
        self.skip_ws();
        if !self.rest().is_empty() {
            return Err(self.err("trailing input"));
        }
        Ok(PathPattern {
            source: self.src.to_string(),
            steps,
            attribute,
        })
    }

    fn predicate(&mut self) -> Result<Predicate> {
        if self.eat("not(") {
            let inner = self.predicate()?;
            self.expect(")")?;
            return Ok(Predicate::Not(Box::new(inner)));
        }
        if self.eat("self::") {
            return Ok(Predicate::SelfName(self.name()?));
        }
        if self.eat("starts-with(") {
            self.expect("@")?;
            let name = self.name()?;
            self.expect(",")?;
            let prefix = self.string()?;
            self.expect(")")?;
            return Ok(Predicate::Attr {
                name,
                test: AttrTest::Prefix(prefix),
            });
        }
        if self.eat("substring(") {
            self.expect("@")?;
            let name = self.name()?;
            self.expect(",")?;
            if self.integer()? != 1 {
                return Err(self.err("only prefix substrings (start 1) are supported"));
            }
            self.expect(",")?;
            let len = self.integer()?;
            self.expect(")")?;
            let negate = if self.eat("!=") {
                true
            } else {
                self.expect("=")?;
                false
            };
            let value = self.string()?;
            if value.chars().count() != len {
                return Err(self.err("substring length must equal the compared literal's length"));
            }
            let p = Predicate::Attr {
                name,
                test: AttrTest::Prefix(value),
            };
            return Ok(if negate { Predicate::Not(Box::new(p)) } else { p });
        }
        self.expect("@")?;
        let name = self.name()?;
        let test = if self.eat("!=") {
            AttrTest::NotEquals(self.string()?)
        } else if self.eat("=") {
            AttrTest::Equals(self.string()?)
        } else {
            AttrTest::Present
        };
        Ok(Predicate::Attr { name, test })
    }
}
