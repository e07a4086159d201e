//! Textual descriptors for generating functions, moment oracles and
//! transfer kernels, as used on the command line and in experiment configs.
//!
//! ```text
//! psi    := power:m | power(m) | doob | const:c | table(path)
//!         | product[psi, ...] | min[psi, ...] | scale(c, psi, ...)
//! oracle := const:c | rademacher | normal[:sigma] | gaussian[:sigma]
//!         | exponential[:rate] | uniform[:a] | sample(path)
//! kernel := doob | bdg | custom(path)
//! ```
//!
//! `,` and `;` both separate list items.

use crate::error::{Error, Result};
use crate::moments::{EmpiricalSample, MomentOracle};
use crate::psi::{combine, make_doob_factor, make_power, CombineMode, GeneratingFunction, PDomain};
use crate::transfer::TransferKernel;

#[derive(Debug, Clone, PartialEq)]
struct Node {
    name: String,
    args: Vec<Node>,
}

const DELIMS: &[char] = &[':', '(', ')', '[', ']', ',', ';'];

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<char> {
        self.input[self.pos..].chars().next()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek() {
            self.pos += c.len_utf8();
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::parse(self.input, format!("{} (at offset {})", reason.into(), self.pos))
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(|c| !DELIMS.contains(&c)) {
            self.bump();
        }
        self.input[start..self.pos].trim().to_string()
    }

    fn node(&mut self) -> Result<Node> {
        self.skip_ws();
        let name = self.word();
        if name.is_empty() {
            return Err(self.err("expected a name"));
        }
        let mut args = Vec::new();
        match self.peek() {
            Some(':') => {
                self.bump();
                let value = self.word();
                if value.is_empty() {
                    return Err(self.err("expected a value after ':'"));
                }
                args.push(Node {
                    name: value,
                    args: Vec::new(),
                });
            }
            Some(open @ ('(' | '[')) => {
                let close = if open == '(' { ')' } else { ']' };
                self.bump();
                loop {
                    args.push(self.node()?);
                    self.skip_ws();
                    match self.peek() {
                        Some(',' | ';') => self.bump(),
                        Some(c) if c == close => {
                            self.bump();
                            break;
                        }
                        _ => return Err(self.err(format!("expected ',' or '{close}'"))),
                    }
                }
            }
            _ => {}
        }
        Ok(Node { name, args })
    }
}

fn parse_tree(input: &str) -> Result<Node> {
    let mut parser = Parser { input, pos: 0 };
    let node = parser.node()?;
    parser.skip_ws();
    if parser.pos != input.len() {
        return Err(parser.err("trailing input"));
    }
    Ok(node)
}

fn number(node: &Node, input: &str) -> Result<f64> {
    node.name
        .parse::<f64>()
        .map_err(|_| Error::parse(input, format!("`{}` is not a number", node.name)))
}

fn single_number(node: &Node, input: &str) -> Result<f64> {
    match node.args.as_slice() {
        [arg] => number(arg, input),
        _ => Err(Error::parse(input, format!("`{}` takes exactly one number", node.name))),
    }
}

fn optional_number(node: &Node, input: &str, default: f64) -> Result<f64> {
    if node.args.is_empty() {
        Ok(default)
    } else {
        single_number(node, input)
    }
}

fn single_path<'n>(node: &'n Node, input: &str) -> Result<&'n str> {
    match node.args.as_slice() {
        [arg] if arg.args.is_empty() => Ok(&arg.name),
        _ => Err(Error::parse(input, format!("`{}` takes one path", node.name))),
    }
}

fn psi_from_node(node: &Node, input: &str) -> Result<GeneratingFunction> {
    let list = |nodes: &[Node]| -> Result<Vec<GeneratingFunction>> {
        nodes.iter().map(|n| psi_from_node(n, input)).collect()
    };
    match node.name.as_str() {
        "power" => make_power(single_number(node, input)?, PDomain::full()),
        "doob" if node.args.is_empty() => make_doob_factor(PDomain::above(1.0)?),
        "const" => GeneratingFunction::constant(single_number(node, input)?, PDomain::full()),
        "table" => GeneratingFunction::load_table(single_path(node, input)?),
        "product" if !node.args.is_empty() => combine(&list(&node.args)?, CombineMode::Product),
        "min" if !node.args.is_empty() => combine(&list(&node.args)?, CombineMode::PointwiseMin),
        "scale" if node.args.len() >= 2 => {
            let c = number(&node.args[0], input)?;
            combine(&list(&node.args[1..])?, CombineMode::Scale(c))
        }
        other => Err(Error::parse(input, format!("unknown generating function `{other}`"))),
    }
}

/// Parses a generating-function descriptor such as `product[doob, power:2]`.
pub fn parse_psi(input: &str) -> Result<GeneratingFunction> {
    psi_from_node(&parse_tree(input)?, input)
}

/// Parses a moment-oracle descriptor such as `normal:2` or `sample(x.csv)`.
pub fn parse_oracle(input: &str) -> Result<MomentOracle> {
    let node = parse_tree(input)?;
    match node.name.as_str() {
        "const" => MomentOracle::constant(single_number(&node, input)?),
        "rademacher" if node.args.is_empty() => Ok(MomentOracle::rademacher()),
        "normal" | "gaussian" => MomentOracle::normal(optional_number(&node, input, 1.0)?),
        "exponential" => MomentOracle::exponential(optional_number(&node, input, 1.0)?),
        "uniform" => MomentOracle::uniform(optional_number(&node, input, 1.0)?),
        "sample" => Ok(MomentOracle::from_sample(EmpiricalSample::load_csv(
            single_path(&node, input)?,
        )?)),
        other => Err(Error::parse(input, format!("unknown oracle `{other}`"))),
    }
}

/// Parses `doob`, `bdg` or `custom(path)`.
pub fn parse_kernel(input: &str) -> Result<TransferKernel> {
    let node = parse_tree(input)?;
    match node.name.as_str() {
        "doob" if node.args.is_empty() => Ok(TransferKernel::doob()),
        "bdg" if node.args.is_empty() => Ok(TransferKernel::bdg()),
        "custom" => TransferKernel::load_table(single_path(&node, input)?),
        other => Err(Error::parse(input, format!("unknown kernel `{other}`"))),
    }
}
