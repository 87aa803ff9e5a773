//! A workbench for two results about time-rewinding puzzle games.
//!
//! * [`counter_machine`] and [`gadget`]: counter programs compiled into
//!   levels of lever, counter, trap-door and branch gadgets whose token
//!   semantics track the program step for step.
//! * [`tm`], [`guide`], [`reach`]: Turing machines whose writes erase the
//!   tape to the right of the head, decided with tour-guide summaries.
//! * [`oracle`]: brute-force searches used to cross-check the deciders.
//! * [`timeline`]: undo/redo timelines and their encoding as such machines.
//! * [`cli`]: the `braidlike` command-line front end.

pub mod cli;
pub mod counter_machine;
pub mod gadget;
pub mod guide;
pub mod oracle;
pub mod reach;
pub mod timeline;
pub mod tm;
