//! Small constructors for tests and examples. Participants in the shorthand
//! action syntax (`AB!m`) are single letters; use the full constructors for
//! longer names.

use crate::alphabet::{Action, Direction, Interaction, Message, Participant};
use crate::word::Word;

pub fn ptp(name: &str) -> Participant {
    Participant::new(name).expect("valid participant name")
}

pub fn msg(name: &str) -> Message {
    Message::new(name).expect("valid message name")
}

/// Parses `A->B:m`.
pub fn int(s: &str) -> Interaction {
    let (sender, rest) = s.split_once("->").expect("`->` in interaction");
    let (receiver, m) = rest.split_once(':').expect("`:` in interaction");
    Interaction::new(ptp(sender.trim()), ptp(receiver.trim()), msg(m.trim()))
        .expect("well-formed interaction")
}

/// Parses `AB!m` or `AB?m` with single-letter participants.
pub fn act(s: &str) -> Action {
    let (pair, kind) = if let Some((pair, _)) = s.split_once('!') {
        (pair, Direction::Send)
    } else {
        let (pair, _) = s.split_once('?').expect("`!` or `?` in action");
        (pair, Direction::Receive)
    };
    let m = &s[pair.len() + 1..];
    let mut chars = pair.chars();
    let sender = chars.next().expect("sender letter").to_string();
    let receiver: String = chars.collect();
    Action::new(ptp(&sender), ptp(&receiver), msg(m), kind).expect("well-formed action")
}

fn split_word(s: &str) -> Vec<&str> {
    s.split('.')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect()
}

/// Finite interaction word, symbols separated by `.`.
pub fn iword(s: &str) -> Word<Interaction> {
    Word::Finite(split_word(s).into_iter().map(int).collect())
}

/// Finite action word, symbols separated by `.`.
pub fn law(s: &str) -> Word<Action> {
    Word::Finite(split_word(s).into_iter().map(act).collect())
}

/// Interaction lasso `prefix ( cycle )^w`.
pub fn liw(prefix: &str, cycle: &str) -> Word<Interaction> {
    Word::lasso(
        split_word(prefix).into_iter().map(int).collect(),
        split_word(cycle).into_iter().map(int).collect(),
    )
}

/// Action lasso `prefix ( cycle )^w`.
pub fn llw(prefix: &str, cycle: &str) -> Word<Action> {
    Word::lasso(
        split_word(prefix).into_iter().map(act).collect(),
        split_word(cycle).into_iter().map(act).collect(),
    )
}

/// The three-participant language `pref{C->A:w . A->B:g, C->B:w . A->B:g,
/// C->A:w . C->B:w}`: Carol asks Alice or Bob to work, Alice gossips with
/// Bob unless Bob is asked after Alice.
pub fn glang_l0() -> crate::lang::ExplicitLanguage<Interaction> {
    crate::lang::ExplicitLanguage::from_generators([
        iword("C->A:w . A->B:g"),
        iword("C->B:w . A->B:g"),
        iword("C->A:w . C->B:w"),
    ])
}

/// A CUI language whose projection deadlocks:
/// `pref{A->C:l . A->B:m . A->C:m, A->C:r . A->B:m . B->C:m}`.
pub fn glang_closnodl() -> crate::lang::ExplicitLanguage<Interaction> {
    crate::lang::ExplicitLanguage::from_generators([
        iword("A->C:l . A->B:m . A->C:m"),
        iword("A->C:r . A->B:m . B->C:m"),
    ])
}

/// A deadlock-free but not lock-free language: both maximal words are
/// infinite, yet after `A->C:n . A->B:m` participant `B` is never involved
/// again.
pub fn glang_df_not_lf() -> crate::lang::ExplicitLanguage<Interaction> {
    crate::lang::ExplicitLanguage::from_generators([
        liw("A->C:n . A->B:m", "A->C:m"),
        liw("A->C:m . A->B:m . B->C:m", "A->C:m"),
    ])
}

/// A lock-free language that is not starvation-free: `A->B:n` stays enabled
/// forever but the `C->D:m` loop can starve it.
pub fn glang_lf_not_sf() -> crate::lang::ExplicitLanguage<Interaction> {
    crate::lang::ExplicitLanguage::from_generators([liw("A->B:n", "C->D:m"), liw("", "C->D:m")])
}

/// Task-dispatching language, unrolled to the given nesting depth. A server
/// `S` takes tasks from a dispatcher `D`, optionally parking them with a
/// helper `H`, and closes the protocol with stop messages to both. `S` is a
/// hub: it takes part in every interaction, and the word structure is that
/// of balanced parentheses.
pub fn task_dispatch_language(depth: usize) -> crate::lang::ExplicitLanguage<Interaction> {
    fn bodies(depth: usize) -> Vec<Vec<Interaction>> {
        let mut out = vec![Vec::new()];
        if depth == 0 {
            return out;
        }
        let inner = bodies(depth - 1);
        // S->D:a . D->S:t . S->H:t . L' . S->H:r . H->S:r . S->D:d . L'
        for x in &inner {
            for y in &inner {
                let mut w = vec![int("S->D:a"), int("D->S:t"), int("S->H:t")];
                w.extend(x.iter().cloned());
                w.extend([int("S->H:r"), int("H->S:r"), int("S->D:d")]);
                w.extend(y.iter().cloned());
                out.push(w);
            }
        }
        // S->D:a . D->S:t . S->D:d . L'
        for x in &inner {
            let mut w = vec![int("S->D:a"), int("D->S:t"), int("S->D:d")];
            w.extend(x.iter().cloned());
            out.push(w);
        }
        out
    }
    crate::lang::ExplicitLanguage::from_generators(bodies(depth).into_iter().map(|mut w| {
        w.extend([int("S->D:s"), int("S->H:s")]);
        Word::Finite(w)
    }))
}
