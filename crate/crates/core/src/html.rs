//! Minimal, strict HTML tokenizer and element-tree builder.
//!
//! Only the subset of HTML that page annotations and table fragments use is
//! understood: elements with (optionally quoted) attributes, character data,
//! comments and doctype declarations. Optional end tags are not inferred, so a
//! fragment such as `<td>a` is reported as malformed instead of being repaired.

use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HtmlError {
    #[error("unterminated {what} starting at byte {offset}")]
    Unterminated { what: &'static str, offset: usize },
    #[error("unexpected closing tag </{name}> at byte {offset}")]
    UnexpectedClose { name: String, offset: usize },
    #[error("element <{name}> opened at byte {offset} is never closed")]
    Unclosed { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Start {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
    },
    End {
        name: String,
    },
    Text,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub span: Range<usize>,
}

pub(crate) fn is_void(name: &str) -> bool {
    matches!(
        name,
        "area"
            | "base"
            | "br"
            | "col"
            | "embed"
            | "hr"
            | "img"
            | "input"
            | "link"
            | "meta"
            | "param"
            | "source"
            | "track"
            | "wbr"
    )
}

fn is_name_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b':' | b'.')
}

/// Splits `src` into tokens. Text runs are not decoded here; see [`decode_entities`].
pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, HtmlError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    let mut text_start = 0;

    let flush_text = |tokens: &mut Vec<Token>, from: usize, to: usize| {
        if to > from {
            tokens.push(Token {
                kind: TokenKind::Text,
                span: from..to,
            });
        }
    };

    while pos < bytes.len() {
        if bytes[pos] != b'<' {
            pos += 1;
            continue;
        }
        let next = bytes.get(pos + 1).copied();
        match next {
            Some(b'!') => {
                flush_text(&mut tokens, text_start, pos);
                let end = if src[pos..].starts_with("<!--") {
                    src[pos + 4..].find("-->").map(|i| pos + 4 + i + 3).ok_or(
                        HtmlError::Unterminated {
                            what: "comment",
                            offset: pos,
                        },
                    )?
                } else {
                    src[pos..]
                        .find('>')
                        .map(|i| pos + i + 1)
                        .ok_or(HtmlError::Unterminated {
                            what: "declaration",
                            offset: pos,
                        })?
                };
                tokens.push(Token {
                    kind: TokenKind::Other,
                    span: pos..end,
                });
                pos = end;
                text_start = pos;
            }
            Some(b'/') if bytes.get(pos + 2).is_some_and(|b| b.is_ascii_alphabetic()) => {
                flush_text(&mut tokens, text_start, pos);
                let name_start = pos + 2;
                let mut i = name_start;
                while i < bytes.len() && is_name_char(bytes[i]) {
                    i += 1;
                }
                let name = src[name_start..i].to_ascii_lowercase();
                let close =
                    src[i..]
                        .find('>')
                        .map(|j| i + j + 1)
                        .ok_or(HtmlError::Unterminated {
                            what: "closing tag",
                            offset: pos,
                        })?;
                tokens.push(Token {
                    kind: TokenKind::End { name },
                    span: pos..close,
                });
                pos = close;
                text_start = pos;
            }
            Some(b) if b.is_ascii_alphabetic() => {
                flush_text(&mut tokens, text_start, pos);
                let (kind, end) = start_tag(src, pos)?;
                tokens.push(Token {
                    kind,
                    span: pos..end,
                });
                pos = end;
                text_start = pos;
            }
            _ => pos += 1,
        }
    }
    flush_text(&mut tokens, text_start, bytes.len());
    Ok(tokens)
}

fn start_tag(src: &str, open: usize) -> Result<(TokenKind, usize), HtmlError> {
    let bytes = src.as_bytes();
    let unterminated = HtmlError::Unterminated {
        what: "tag",
        offset: open,
    };
    let mut i = open + 1;
    while i < bytes.len() && is_name_char(bytes[i]) {
        i += 1;
    }
    let name = src[open + 1..i].to_ascii_lowercase();
    let mut attrs: Vec<(String, String)> = Vec::new();
    loop {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        match bytes.get(i) {
            None => return Err(unterminated),
            Some(b'>') => {
                return Ok((
                    TokenKind::Start {
                        name,
                        attrs,
                        self_closing: false,
                    },
                    i + 1,
                ))
            }
            Some(b'/') if bytes.get(i + 1) == Some(&b'>') => {
                return Ok((
                    TokenKind::Start {
                        name,
                        attrs,
                        self_closing: true,
                    },
                    i + 2,
                ))
            }
            Some(b'/') => {
                i += 1;
                continue;
            }
            Some(_) => {}
        }
        let attr_start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'=' | b'>')
        {
            if bytes[i] == b'/' && bytes.get(i + 1) == Some(&b'>') {
                break;
            }
            i += 1;
        }
        let attr_name = src[attr_start..i].to_ascii_lowercase();
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let mut value = String::new();
        if bytes.get(i) == Some(&b'=') {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            match bytes.get(i) {
                Some(&q @ (b'"' | b'\'')) => {
                    let close = src[i + 1..].find(q as char).ok_or(unterminated.clone())?;
                    value = decode_entities(&src[i + 1..i + 1 + close]);
                    i = i + 1 + close + 1;
                }
                Some(_) => {
                    let v_start = i;
                    while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                        i += 1;
                    }
                    value = decode_entities(&src[v_start..i]);
                }
                None => return Err(unterminated),
            }
        }
        if !attr_name.is_empty() && !attrs.iter().any(|(n, _)| *n == attr_name) {
            attrs.push((attr_name, value));
        }
    }
}

/// Decodes the character references HTML annotations use in practice.
/// Unknown references are left verbatim.
pub fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest[1..]
            .find(';')
            .filter(|&semi| semi <= 10)
            .and_then(|semi| {
                let name = &rest[1..1 + semi];
                let ch = match name {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some('\u{a0}'),
                    _ => name.strip_prefix('#').and_then(|num| {
                        let code = match num.strip_prefix(['x', 'X']) {
                            Some(hex) => u32::from_str_radix(hex, 16).ok(),
                            None => num.parse::<u32>().ok(),
                        };
                        code.and_then(char::from_u32)
                    }),
                };
                ch.map(|c| (c, semi + 2))
            });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Escapes character data so that [`decode_entities`] restores it exactly.
pub fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Node {
    Element(Element),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Node>,
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn child_elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    /// Decoded text of all descendants. `br` and block-level elements act as
    /// word separators.
    pub fn text_content(&self) -> String {
        let mut out = String::new();
        collect_text(&self.children, &mut out);
        out
    }
}

fn collect_text(nodes: &[Node], out: &mut String) {
    for node in nodes {
        match node {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) => {
                let separates = matches!(e.name.as_str(), "br" | "p" | "div" | "li");
                if separates {
                    out.push(' ');
                }
                collect_text(&e.children, out);
                if separates && e.name != "br" {
                    out.push(' ');
                }
            }
        }
    }
}

/// Builds the element forest of a fragment. Every non-void element must be
/// closed explicitly and in order.
pub(crate) fn parse_fragment(src: &str) -> Result<Vec<Node>, HtmlError> {
    let tokens = tokenize(src)?;
    let mut stack: Vec<(Element, usize)> = Vec::new();
    let mut roots: Vec<Node> = Vec::new();

    fn push(stack: &mut [(Element, usize)], roots: &mut Vec<Node>, node: Node) {
        match stack.last_mut() {
            Some((parent, _)) => parent.children.push(node),
            None => roots.push(node),
        }
    }

    for token in tokens {
        match token.kind {
            TokenKind::Start {
                name,
                attrs,
                self_closing,
            } => {
                let element = Element {
                    name,
                    attrs,
                    children: Vec::new(),
                };
                if self_closing || is_void(&element.name) {
                    push(&mut stack, &mut roots, Node::Element(element));
                } else {
                    stack.push((element, token.span.start));
                }
            }
            TokenKind::End { name } => {
                if is_void(&name) {
                    continue;
                }
                match stack.pop() {
                    Some((element, _)) if element.name == name => {
                        push(&mut stack, &mut roots, Node::Element(element));
                    }
                    _ => {
                        return Err(HtmlError::UnexpectedClose {
                            name,
                            offset: token.span.start,
                        })
                    }
                }
            }
            TokenKind::Text => {
                let text = decode_entities(&src[token.span.clone()]);
                push(&mut stack, &mut roots, Node::Text(text));
            }
            TokenKind::Other => {}
        }
    }
    if let Some((element, offset)) = stack.pop() {
        return Err(HtmlError::Unclosed {
            name: element.name,
            offset,
        });
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_attributes_in_all_quoting_styles() {
        let tokens = tokenize(r#"<TD a="1" b='2' c=3 d>x</td>"#).unwrap();
        match &tokens[0].kind {
            TokenKind::Start { name, attrs, .. } => {
                assert_eq!(name, "td");
                assert_eq!(
                    attrs,
                    &vec![
                        ("a".into(), "1".into()),
                        ("b".into(), "2".into()),
                        ("c".into(), "3".into()),
                        ("d".into(), String::new()),
                    ]
                );
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(tokens[1].kind, TokenKind::Text);
        assert_eq!(tokens[2].kind, TokenKind::End { name: "td".into() });
    }

    #[test]
    fn lone_angle_bracket_is_text() {
        let tokens = tokenize("a < b and c<1").unwrap();
        assert_eq!(tokens.len(), 1);
    }

    #[test]
    fn entity_round_trip() {
        let s = "a < b & c > \"d\" &amp; 中";
        assert_eq!(decode_entities(&escape_text(s)), s);
        assert_eq!(decode_entities(&escape_attr(s)), s);
        assert_eq!(decode_entities("&#65;&#x42;&unknown;&"), "AB&unknown;&");
    }

    #[test]
    fn fragment_requires_explicit_closing() {
        assert!(parse_fragment("<td>a").is_err());
        assert!(parse_fragment("<tr><td>a</tr>").is_err());
        assert!(parse_fragment("</td>").is_err());
        let nodes = parse_fragment("<table><tr><td>a<br>b</td></tr></table>").unwrap();
        assert_eq!(nodes.len(), 1);
    }

    #[test]
    fn text_content_separates_line_breaks() {
        let nodes = parse_fragment("<td>a<br/>b<b>c</b></td>").unwrap();
        let Node::Element(td) = &nodes[0] else {
            panic!()
        };
        assert_eq!(td.text_content(), "a bc");
    }
}
