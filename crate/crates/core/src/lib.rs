pub mod crypto;
pub mod eventlog;
pub mod finality;
pub mod registry;
pub mod sim;
pub mod scenario;
