pub mod arrow;
pub mod chains;
pub mod hyper;
pub mod logsob;
pub mod mixing;
pub mod nicd;
pub mod space;
