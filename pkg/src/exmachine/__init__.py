"""Ex-machine virtual machine."""
