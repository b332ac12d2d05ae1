# domain operations
