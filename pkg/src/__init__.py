"""Critical random field Ising laboratory."""
