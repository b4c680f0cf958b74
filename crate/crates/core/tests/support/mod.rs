pub mod kripke;
