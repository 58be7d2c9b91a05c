# Services package for file I/O, generators and sweeps
