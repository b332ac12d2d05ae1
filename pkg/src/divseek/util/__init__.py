# utility package
